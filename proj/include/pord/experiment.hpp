#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "pord/denoise.hpp"
#include "pord/image.hpp"
#include "pord/inpaint.hpp"

namespace pord {

/// Malformed experiment document or unknown setting.
class SpecError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A referenced image, bank or training file is missing or fails its check.
class AssetError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Per-iteration settings that replace the stock schedule entries.
struct IterationOverride {
  std::optional<std::size_t> K;
  std::optional<std::size_t> patch_side;
  std::optional<std::size_t> window;  // B
  std::optional<double> C;
  std::optional<double> epsilon;
  std::optional<std::size_t> filter_length;  // L
};

/// One experiment block.
///
/// Text form: `key = value` lines, `#` comments, blocks opened by a line
/// `[experiment]` (or `[experiment some-name]`). Keys:
///   name, protocol (denoise-table2 | inpaint-table4 | custom), image (may
///   repeat), sigma, erase-fraction, iterations, seed, threads, output-dir,
///   bank.<i>, train (may repeat), operator (identity | moving-average:<len> |
///   cubic), cubic (pchip | natural), reset-known (true | false), and the
///   per-iteration K, patch_side, B, C, epsilon, L, either bare (every
///   iteration) or suffixed .<i> (1-based).
/// Images are PGM paths or `synthetic:dead-leaves:<size>:<seed>` /
/// `synthetic:ramp:<height>x<width>`.
struct ExperimentSpec {
  std::string name;
  std::string protocol = "custom";
  std::vector<std::string> images;
  std::optional<double> sigma;
  std::optional<double> erase_fraction;
  std::optional<std::size_t> iterations;
  std::uint64_t seed = 0;
  std::size_t threads = 1;
  std::string output_dir;
  std::map<std::size_t, std::string> banks;  // 1-based iteration -> file
  std::vector<std::string> train;
  std::string op = "identity";
  CubicKind cubic = CubicKind::pchip;
  bool reset_known = true;
  IterationOverride all_iterations;
  std::map<std::size_t, IterationOverride> per_iteration;  // 1-based

  /// Applies one `key = value` setting. Repeatable keys append.
  void set(std::string_view key, std::string_view value);

  std::size_t iteration_count() const;
  std::vector<DenoiseIteration> denoise_schedule() const;
  std::vector<InpaintIteration> inpaint_schedule() const;
};

std::vector<ExperimentSpec> parse_experiments(std::istream& in);
std::vector<ExperimentSpec> load_experiments(const std::filesystem::path& path);

/// Loads a PGM path or builds a `synthetic:` image.
Image resolve_image(const std::string& ref);
/// Short label used in reports: file stem, or the synthetic reference.
std::string image_label(const std::string& ref);

struct ReportRow {
  std::string image;
  double sigma = 0.0;  // noise std; 0 for inpainting runs
  std::size_t iteration = 1;
  double psnr_db = 0.0;
  double wall_ms = 0.0;
  std::uint64_t distance_evals = 0;

  bool operator==(const ReportRow&) const = default;
};

struct Report {
  std::vector<ReportRow> rows;
  bool operator==(const Report&) const = default;
};

/// CSV with header image,sigma,iteration,psnr_db,wall_ms,distance_evals.
/// Numbers are printed so that parsing gives back the same doubles.
std::string to_csv(const Report& report);
Report parse_csv(std::string_view text);
void save_report(const std::filesystem::path& path, const Report& report);
Report load_report(const std::filesystem::path& path);

/// Runs one experiment. Each listed image is corrupted (Gaussian noise of
/// `sigma` or erasure of `erase-fraction`) with seeds drawn from `seed`,
/// restored, and scored against the clean image after every iteration.
/// Restored images go to output-dir when it is set.
Report run_experiment(const ExperimentSpec& spec);

/// FNV-1a 64-bit hash of a file's bytes.
std::uint64_t file_checksum(const std::filesystem::path& path);

/// One line of an asset manifest: `<file> <height> <width> [<fnv1a64 hex>]`.
struct AssetEntry {
  std::string file;
  std::size_t height = 0;
  std::size_t width = 0;
  std::optional<std::uint64_t> checksum;
};

std::vector<AssetEntry> load_manifest(const std::filesystem::path& path);

/// Loads `dir / entry.file` and checks its size and checksum. Throws
/// AssetError on any mismatch.
Image load_verified_asset(const std::filesystem::path& dir, const AssetEntry& entry);

}  // namespace pord
