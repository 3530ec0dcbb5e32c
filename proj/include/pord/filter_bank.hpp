#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

#include "pord/pipeline.hpp"

namespace pord {

/// Learned taps for smooth-class and edge-class signals, stacked as
/// h = [smooth; edge].
struct FilterBank {
  double sigma = 0.0;
  int iteration = 1;
  std::vector<double> smooth;
  std::vector<double> edge;

  std::size_t length() const { return smooth.size(); }
  std::vector<double> stacked() const;
  static FilterBank from_stacked(std::span<const double> h, double sigma = 0.0, int iteration = 1);
  /// Unit tap at the center of both filters.
  static FilterBank impulse(std::size_t length, double sigma = 0.0, int iteration = 1);

  bool operator==(const FilterBank&) const = default;
};

/// Same-size convolution of `in` with a centered kernel (center tap
/// (L-1)/2), symmetric half-sample extension at both ends:
///   out[m] = sum_t taps[t] * in[m + center - t].
void filter_signal(std::span<const double> in, std::span<const double> taps, std::span<double> out);
std::vector<double> filter_signal(std::span<const double> in, std::span<const double> taps);

/// H for denoising: segment 0 uses the smooth taps, segment 1 the edge taps.
class FilterOperator final : public Operator1D {
 public:
  explicit FilterOperator(FilterBank bank) : bank_(std::move(bank)) {}
  void apply(const SignalContext& ctx, std::span<const double> values, std::span<const std::uint8_t>,
             std::span<double> out) const override;

 private:
  FilterBank bank_;
};

/// Text format: "sigma <v>", "iteration <i>", "L <len>", then 2L taps one per
/// line (smooth then edge), printed with 17 significant digits.
void save_filter_bank(const std::filesystem::path& path, const FilterBank& bank);
FilterBank load_filter_bank(const std::filesystem::path& path);

}  // namespace pord
