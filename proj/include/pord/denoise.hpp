#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "pord/filter_bank.hpp"
#include "pord/image.hpp"
#include "pord/ordering.hpp"
#include "pord/patches.hpp"
#include "pord/pipeline.hpp"

namespace pord {

/// Smooth/edge split: a patch is smooth when its population standard
/// deviation is below C * sigma.
struct PatchClassification {
  static constexpr std::uint8_t smooth = 0;
  static constexpr std::uint8_t edge = 1;

  std::vector<std::uint8_t> labels;  // per patch, smooth or edge
  double C = 0.0;
  double sigma = 0.0;

  std::size_t smooth_count() const;
};

PatchClassification classify_patches(const PatchSet& patches, double C, double sigma);

/// Two independent orderings, one per class, seeded from params.rng_seed.
struct SplitOrderings {
  PathSegment smooth;
  PathSegment edge;
};
SplitOrderings split_orderings(const PatchSet& patches, const PatchClassification& cls, DistanceKind kind,
                               const SolverParams& params, OrderingStats* stats = nullptr);

/// Settings of one denoising iteration.
struct DenoiseIteration {
  std::size_t K = 10;
  std::size_t patch_side = 8;
  std::size_t window = 111;
  double C = 1.2;
  double epsilon = 1e6;
  std::size_t filter_length = 25;
};

/// Stock parameters for sigma in {10, 25, 50}; other sigmas get the row of
/// the nearest listed level.
std::vector<DenoiseIteration> default_denoise_schedule(double sigma);

/// Smooth/edge plans for one iteration, built from the patches of `guide`.
std::vector<PathPlan> build_denoise_plans(const Image& guide, double sigma, const DenoiseIteration& it,
                                          std::uint64_t seed, std::size_t threads = 1,
                                          OrderingStats* stats = nullptr);

/// The dense N x 2L map h -> restored image for frozen plans. Column c holds
/// the output for a unit tap at position c of h = [h_smooth; h_edge].
class QMatrix {
 public:
  QMatrix(std::size_t height, std::size_t width, std::size_t filter_length);

  std::size_t height() const { return height_; }
  std::size_t width() const { return width_; }
  std::size_t pixels() const { return height_ * width_; }
  std::size_t filter_length() const { return length_; }
  std::size_t columns() const { return 2 * length_; }

  std::span<double> column(std::size_t c) { return {data_.data() + c * pixels(), pixels()}; }
  std::span<const double> column(std::size_t c) const { return {data_.data() + c * pixels(), pixels()}; }
  /// Column-major storage, pixels() x columns().
  const double* data() const { return data_.data(); }

  /// Q h as an image.
  Image apply(std::span<const double> h) const;

 private:
  std::size_t height_;
  std::size_t width_;
  std::size_t length_;
  std::vector<double> data_;
};

/// Builds Q for the noisy image z under frozen two-class plans. Gives the same
/// columns as running apply_plans once per unit-tap bank, but with one pass
/// over the signals.
QMatrix build_q(const Image& z, std::span<const PathPlan> plans, std::size_t patch_side, std::size_t filter_length,
                std::size_t threads = 1);

/// Accumulates sum_g Q_g^T Q_g and sum_g Q_g^T y_g and solves for h.
class FilterTrainer {
 public:
  explicit FilterTrainer(std::size_t filter_length);

  void add(const QMatrix& q, const Image& clean);

  struct Result {
    FilterBank bank;
    bool ridge_applied = false;  // normal matrix was (numerically) singular
    double ridge_lambda = 0.0;
  };
  Result solve(double sigma = 0.0, int iteration = 1) const;

  /// sum_g |y_g - Q_g h|^2 for the pairs added so far, from the accumulated
  /// normal equations.
  double residual(std::span<const double> h) const;

  std::size_t filter_length() const { return length_; }
  std::size_t pairs() const { return pairs_; }

 private:
  std::size_t length_;
  std::size_t pairs_ = 0;
  std::vector<double> gram_;  // 2L x 2L, column-major
  std::vector<double> rhs_;   // 2L
  double y_norm2_ = 0.0;
};

struct DenoiseOptions {
  std::uint64_t seed = 0;
  std::size_t threads = 1;
  IterationCallback on_iteration;
};

/// Runs the schedule with one bank per iteration. Iteration 1 orders the
/// patches of z; later iterations classify and order the patches of the
/// previous output, still filtering the samples of z with the noise sigma of
/// the input.
Image denoise(const Image& z, double sigma, std::span<const FilterBank> banks,
              std::span<const DenoiseIteration> schedule, const DenoiseOptions& opts = {},
              std::vector<Image>* per_iteration = nullptr, OrderingStats* stats = nullptr);

struct TrainingReport {
  std::vector<FilterBank> banks;   // one per iteration
  std::vector<bool> ridge_applied;  // per iteration
};

/// Learns one bank per iteration from clean images. Each image gets noise of
/// std sigma; later iterations order patches of the previous iteration's
/// output on the training images.
TrainingReport train_denoiser(std::span<const Image> clean, double sigma, std::span<const DenoiseIteration> schedule,
                              const DenoiseOptions& opts = {});

}  // namespace pord
