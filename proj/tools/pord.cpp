// Command-line front end: corrupt, denoise, inpaint, train, evaluate, order,
// experiment.

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "pord/corruption.hpp"
#include "pord/denoise.hpp"
#include "pord/diagnostics.hpp"
#include "pord/experiment.hpp"
#include "pord/filter_bank.hpp"
#include "pord/image_io.hpp"
#include "pord/inpaint.hpp"
#include "pord/ordering.hpp"

#ifndef PORD_DEFAULT_BANK_DIR
#define PORD_DEFAULT_BANK_DIR "banks"
#endif

namespace fs = std::filesystem;
using namespace pord;

namespace {

enum ExitCode { ok = 0, bad_args = 2, io_failure = 3, numeric_failure = 4 };

/// Thrown for argument combinations CLI11 cannot express.
struct UsageError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct Common {
  std::uint64_t seed = 0;
  std::size_t threads = 1;
  bool quiet = false;
  std::string config;
  std::vector<std::string> sets;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--seed", c.seed, "Seed for every random choice");
  cmd->add_option("--threads", c.threads, "Worker threads (results do not depend on it)")->check(CLI::PositiveNumber);
  cmd->add_flag("--quiet", c.quiet, "Only report errors");
  cmd->add_option("--config", c.config, "Settings file (experiment document, one block)");
  cmd->add_option("--set", c.sets, "Extra key=value setting, applied after --config");
}

bool has_ext(const std::string& path, const char* ext) { return fs::path(path).extension() == ext; }

Image read_image(const std::string& path) { return has_ext(path, ".raw") ? load_raw(path) : load_image(path); }

void write_image(const std::string& path, const Image& img) {
  if (has_ext(path, ".raw")) save_raw(path, img);
  else if (has_ext(path, ".png")) save_png(path, img);
  else save_pgm(path, img);
}

std::string iteration_path(const std::string& out, std::size_t i) {
  const fs::path p(out);
  return (p.parent_path() / (p.stem().string() + "_iter" + std::to_string(i) + p.extension().string())).string();
}

/// Settings resolved in order: built-in defaults, --config, --set, then the
/// explicit flags of the command (applied by the caller).
ExperimentSpec load_settings(const Common& c, const std::string& protocol) {
  ExperimentSpec spec;
  spec.protocol = protocol;
  if (!c.config.empty()) {
    const auto blocks = load_experiments(c.config);
    if (blocks.size() > 1) throw UsageError("--config file holds more than one block");
    if (!blocks.empty()) {
      spec = blocks[0];
      spec.protocol = protocol;
    }
  }
  for (const auto& kv : c.sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw UsageError("--set expects key=value, got '" + kv + "'");
    spec.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  return spec;
}

void report_psnr(const Common& c, const Image* reference, const IterationInfo& info) {
  if (c.quiet) return;
  std::printf("iteration %zu: %.1f ms, %llu distance evaluations", info.index + 1, info.wall_ms,
              static_cast<unsigned long long>(info.stats.distance_evals));
  if (reference) std::printf(", PSNR %.4f dB", psnr(*reference, *info.estimate));
  std::printf("\n");
}

std::string bank_file(double sigma, std::size_t iteration) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "s%g_iter%zu.txt", sigma, iteration);
  return buf;
}

// --- corrupt -------------------------------------------------------------

struct CorruptArgs {
  Common c;
  std::string in, out, mask_out;
  std::optional<double> sigma, fraction;
};

int run_corrupt(const CorruptArgs& a) {
  if (a.sigma.has_value() == a.fraction.has_value()) throw UsageError("give exactly one of --sigma and --erase-fraction");
  const Image clean = read_image(a.in);
  const auto spec = a.sigma ? CorruptionSpec::gaussian(*a.sigma, a.c.seed) : CorruptionSpec::erasure(*a.fraction, a.c.seed);
  if (a.sigma && *a.sigma < 0) throw UsageError("--sigma must be >= 0");
  if (a.fraction && (*a.fraction < 0 || *a.fraction > 1)) throw UsageError("--erase-fraction must lie in [0, 1]");
  const Corrupted c = corrupt(clean, spec);
  write_image(a.out, c.image);
  if (!a.mask_out.empty()) save_mask(a.mask_out, c.mask);
  if (!a.c.quiet) std::printf("wrote %s (PSNR %.4f dB against the input)\n", a.out.c_str(), psnr(clean, c.image));
  return ok;
}

// --- denoise -------------------------------------------------------------

struct DenoiseArgs {
  Common c;
  std::string in, out, reference, bank_dir = PORD_DEFAULT_BANK_DIR;
  std::optional<double> sigma;
  std::vector<std::string> banks;
  bool bank_auto = false, dump = false;
  std::optional<std::size_t> iters;
};

int run_denoise(const DenoiseArgs& a) {
  ExperimentSpec s = load_settings(a.c, "denoise-table2");
  if (a.sigma) s.sigma = *a.sigma;
  if (!s.sigma) throw UsageError("--sigma is required");
  if (a.iters) s.iterations = *a.iters;
  for (std::size_t i = 0; i < a.banks.size(); ++i) s.banks[i + 1] = a.banks[i];
  const auto schedule = s.denoise_schedule();

  std::vector<FilterBank> banks;
  if (a.bank_auto) {
    // nearest shipped noise level
    double best = 25;
    for (double level : {10.0, 25.0, 50.0}) {
      if (std::abs(level - *s.sigma) < std::abs(best - *s.sigma)) best = level;
    }
    for (std::size_t i = 1; i <= schedule.size(); ++i) banks.push_back(load_filter_bank(fs::path(a.bank_dir) / bank_file(best, i)));
  } else {
    for (std::size_t i = 1; i <= schedule.size(); ++i) {
      if (!s.banks.count(i)) throw UsageError("missing --bank for iteration " + std::to_string(i) + " (or use --bank-auto)");
      banks.push_back(load_filter_bank(s.banks.at(i)));
    }
  }
  const Image z = read_image(a.in);
  const std::optional<Image> ref = a.reference.empty() ? std::nullopt : std::optional<Image>(read_image(a.reference));
  if (ref) require_same_size(*ref, z, "reference");
  DenoiseOptions opts;
  opts.seed = a.c.seed;
  opts.threads = a.c.threads;
  opts.on_iteration = [&](const IterationInfo& info) {
    report_psnr(a.c, ref ? &*ref : nullptr, info);
    if (a.dump) write_image(iteration_path(a.out, info.index + 1), *info.estimate);
  };
  const Image out = denoise(z, *s.sigma, banks, schedule, opts);
  write_image(a.out, out);
  return ok;
}

// --- inpaint -------------------------------------------------------------

struct InpaintArgs {
  Common c;
  std::string in, out, mask, reference, cubic;
  std::optional<double> fraction;
  std::optional<std::size_t> iters;
  bool dump = false, no_reset = false;
};

int run_inpaint(const InpaintArgs& a) {
  ExperimentSpec s = load_settings(a.c, "inpaint-table4");
  if (a.iters) s.iterations = *a.iters;
  if (!a.cubic.empty()) s.set("cubic", a.cubic);
  if (a.no_reset) s.reset_known = false;
  if (a.fraction) s.erase_fraction = *a.fraction;
  if (a.mask.empty() == !s.erase_fraction.has_value()) throw UsageError("give exactly one of --mask and --erase-fraction");

  Image z = read_image(a.in);
  PixelMask mask;
  if (!a.mask.empty()) {
    mask = load_mask(a.mask);
    if (!mask.matches(z)) throw DimensionError("mask size does not match the input image");
  } else {
    // the input is taken as clean and erased here
    Corrupted c = corrupt(z, CorruptionSpec::erasure(*s.erase_fraction, a.c.seed));
    z = std::move(c.image);
    mask = std::move(c.mask);
  }
  const std::optional<Image> ref = a.reference.empty() ? std::nullopt : std::optional<Image>(read_image(a.reference));
  if (ref) require_same_size(*ref, z, "reference");
  InpaintOptions opts;
  opts.seed = a.c.seed;
  opts.threads = a.c.threads;
  opts.cubic = s.cubic;
  opts.reset_known = s.reset_known;
  opts.on_iteration = [&](const IterationInfo& info) {
    report_psnr(a.c, ref ? &*ref : nullptr, info);
    if (a.dump) write_image(iteration_path(a.out, info.index + 1), *info.estimate);
  };
  const Image out = inpaint(z, mask, s.inpaint_schedule(), opts);
  write_image(a.out, out);
  return ok;
}

// --- train ---------------------------------------------------------------

struct TrainArgs {
  Common c;
  std::vector<std::string> images;
  std::optional<double> sigma;
  std::optional<std::size_t> iters;
  std::string out_dir = ".";
};

int run_train(const TrainArgs& a) {
  ExperimentSpec s = load_settings(a.c, "denoise-table2");
  if (a.sigma) s.sigma = *a.sigma;
  if (!s.sigma) throw UsageError("--sigma is required");
  if (a.iters) s.iterations = *a.iters;
  std::vector<std::string> refs = s.train;
  refs.insert(refs.end(), a.images.begin(), a.images.end());
  if (refs.empty()) throw UsageError("no training images given");
  std::vector<Image> clean;
  for (const auto& r : refs) clean.push_back(r.rfind("synthetic:", 0) == 0 ? resolve_image(r) : read_image(r));
  const auto schedule = s.denoise_schedule();
  const TrainingReport rep = train_denoiser(clean, *s.sigma, schedule, {.seed = a.c.seed, .threads = a.c.threads});
  fs::create_directories(a.out_dir);
  for (std::size_t i = 0; i < rep.banks.size(); ++i) {
    const fs::path path = fs::path(a.out_dir) / bank_file(*s.sigma, i + 1);
    save_filter_bank(path, rep.banks[i]);
    if (rep.ridge_applied[i]) {
      std::fprintf(stderr, "note: iteration %zu normal equations were singular; ridge regularization applied\n", i + 1);
    }
    if (!a.c.quiet) std::printf("wrote %s\n", path.string().c_str());
  }
  return ok;
}

// --- evaluate ------------------------------------------------------------

struct EvaluateArgs {
  Common c;
  std::string reference;
  std::vector<std::string> tests;
};

int run_evaluate(const EvaluateArgs& a) {
  const Image ref = read_image(a.reference);
  for (const auto& t : a.tests) {
    const Image img = read_image(t);
    std::printf("%s: PSNR %.4f dB\n", t.c_str(), psnr(ref, img));
  }
  return ok;
}

// --- order ---------------------------------------------------------------

struct OrderArgs {
  Common c;
  std::string in, out;
  std::size_t patch_side = 8, window = 111;
  double epsilon = 1e6;
  bool unrestricted = false;
};

int run_order(const OrderArgs& a) {
  const Image img = read_image(a.in);
  const PatchSet ps(img, a.patch_side);
  SolverParams p;
  p.window_side = a.unrestricted ? SolverParams::unrestricted : a.window;
  p.epsilon = a.epsilon;
  p.rng_seed = a.c.seed;
  OrderingStats stats;
  const Ordering o = build_ordering(ps, DistanceKind::euclidean_mean, p, &stats);
  if (!a.out.empty()) save_ordering(a.out, o);
  if (!a.c.quiet) {
    const SpatialHistogram h = spatial_distance_histogram(o, ps);
    std::printf("patches %zu, path cost %.6g, spatial length %.6g, pairs within sqrt(2): %.2f%%, distance evaluations %llu\n",
                ps.count(), o.path_cost, h.total_length, 100.0 * h.near_fraction(),
                static_cast<unsigned long long>(stats.distance_evals));
  }
  return ok;
}

// --- experiment ----------------------------------------------------------

struct ExperimentArgs {
  Common c;
  std::string spec, report;
};

int run_experiment_cmd(const ExperimentArgs& a) {
  const auto specs = load_experiments(a.spec);
  if (specs.empty()) throw UsageError(a.spec + " holds no experiment");
  Report all;
  for (ExperimentSpec s : specs) {
    if (a.c.threads > 1) s.threads = a.c.threads;
    const Report r = run_experiment(s);
    all.rows.insert(all.rows.end(), r.rows.begin(), r.rows.end());
  }
  if (!a.report.empty()) save_report(a.report, all);
  if (!a.c.quiet) std::fputs(to_csv(all).c_str(), stdout);
  return ok;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Patch-ordering image denoising and inpainting"};
  app.require_subcommand(1);

  CorruptArgs ca;
  auto* corrupt_cmd = app.add_subcommand("corrupt", "Add Gaussian noise or erase random pixels");
  add_common(corrupt_cmd, ca.c);
  corrupt_cmd->add_option("--in", ca.in, "Clean image")->required();
  corrupt_cmd->add_option("--out", ca.out, "Corrupted image (.pgm, .png or .raw)")->required();
  corrupt_cmd->add_option("--sigma", ca.sigma, "Noise standard deviation");
  corrupt_cmd->add_option("--erase-fraction", ca.fraction, "Share of pixels to erase");
  corrupt_cmd->add_option("--mask-out", ca.mask_out, "Write the presence mask here");

  DenoiseArgs da;
  if (const char* env = std::getenv("PORD_BANK_DIR")) da.bank_dir = env;
  auto* denoise_cmd = app.add_subcommand("denoise", "Remove additive Gaussian noise");
  add_common(denoise_cmd, da.c);
  denoise_cmd->add_option("--in", da.in, "Noisy image")->required();
  denoise_cmd->add_option("--out", da.out, "Restored image")->required();
  denoise_cmd->add_option("--sigma", da.sigma, "Noise standard deviation");
  denoise_cmd->add_option("--bank", da.banks, "Filter bank file, one per iteration in order");
  denoise_cmd->add_flag("--bank-auto", da.bank_auto, "Use the shipped banks of the nearest noise level");
  denoise_cmd->add_option("--bank-dir", da.bank_dir, "Where --bank-auto looks")->capture_default_str();
  denoise_cmd->add_option("--iters", da.iters, "Number of iterations");
  denoise_cmd->add_option("--reference", da.reference, "Clean image; prints PSNR per iteration");
  denoise_cmd->add_flag("--dump-iters", da.dump, "Write every iteration's output next to --out");

  InpaintArgs ia;
  auto* inpaint_cmd = app.add_subcommand("inpaint", "Fill in missing pixels");
  add_common(inpaint_cmd, ia.c);
  inpaint_cmd->add_option("--in", ia.in, "Image with missing pixels")->required();
  inpaint_cmd->add_option("--out", ia.out, "Restored image")->required();
  inpaint_cmd->add_option("--mask", ia.mask, "Mask PGM, 0 = missing");
  inpaint_cmd->add_option("--erase-fraction", ia.fraction, "Erase this share of the input's pixels first");
  inpaint_cmd->add_option("--iters", ia.iters, "Number of iterations");
  inpaint_cmd->add_option("--cubic", ia.cubic, "pchip or natural")->check(CLI::IsMember({"pchip", "natural"}));
  inpaint_cmd->add_flag("--no-reset-known", ia.no_reset, "Keep the filtered values at observed pixels");
  inpaint_cmd->add_option("--reference", ia.reference, "Clean image; prints PSNR per iteration");
  inpaint_cmd->add_flag("--dump-iters", ia.dump, "Write every iteration's output next to --out");

  TrainArgs ta;
  auto* train_cmd = app.add_subcommand("train", "Learn filter banks from clean images");
  add_common(train_cmd, ta.c);
  train_cmd->add_option("--image", ta.images, "Clean training image (repeatable)");
  train_cmd->add_option("--sigma", ta.sigma, "Noise standard deviation");
  train_cmd->add_option("--iters", ta.iters, "Number of iterations");
  train_cmd->add_option("--out-dir", ta.out_dir, "Directory for s<sigma>_iter<i>.txt")->capture_default_str();

  EvaluateArgs ea;
  auto* eval_cmd = app.add_subcommand("evaluate", "PSNR of images against a reference");
  add_common(eval_cmd, ea.c);
  eval_cmd->add_option("--reference", ea.reference, "Clean image")->required();
  eval_cmd->add_option("--test", ea.tests, "Image to score (repeatable)")->required();

  OrderArgs oa;
  auto* order_cmd = app.add_subcommand("order", "Build one patch ordering and print path statistics");
  add_common(order_cmd, oa.c);
  order_cmd->add_option("--in", oa.in, "Image")->required();
  order_cmd->add_option("--out", oa.out, "Ordering cache file");
  order_cmd->add_option("--patch-side", oa.patch_side)->capture_default_str()->check(CLI::PositiveNumber);
  order_cmd->add_option("--window", oa.window, "Search window side B")->capture_default_str()->check(CLI::PositiveNumber);
  order_cmd->add_option("--epsilon", oa.epsilon)->capture_default_str();
  order_cmd->add_flag("--unrestricted", oa.unrestricted, "Search every unvisited patch");

  ExperimentArgs xa;
  auto* exp_cmd = app.add_subcommand("experiment", "Run an experiment document and print the report");
  add_common(exp_cmd, xa.c);
  exp_cmd->add_option("--spec", xa.spec, "Experiment document")->required();
  exp_cmd->add_option("--report", xa.report, "Write the CSV report here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? ok : bad_args;
  }

  try {
    if (*corrupt_cmd) return run_corrupt(ca);
    if (*denoise_cmd) return run_denoise(da);
    if (*inpaint_cmd) return run_inpaint(ia);
    if (*train_cmd) return run_train(ta);
    if (*eval_cmd) return run_evaluate(ea);
    if (*order_cmd) return run_order(oa);
    if (*exp_cmd) return run_experiment_cmd(xa);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return bad_args;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return io_failure;
  } catch (const FormatError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return io_failure;
  } catch (const AssetError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return io_failure;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return io_failure;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return bad_args;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return numeric_failure;
  }
  return bad_args;
}
