#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "pord/image.hpp"
#include "pord/ordering.hpp"
#include "pord/patches.hpp"

namespace pord {

/// Identifies one permuted signal handed to an operator.
struct SignalContext {
  std::size_t plan = 0;     // which of the K orderings
  std::size_t offset = 0;   // subimage index j, 0-based
  std::size_t segment = 0;  // patch class the signal belongs to
};

/// A length-preserving 1D transform applied to permuted subimage signals.
/// Implementations must be safe to call concurrently.
class Operator1D {
 public:
  virtual ~Operator1D() = default;
  /// `valid` flags known samples (1) and has the same length as `values`.
  virtual void apply(const SignalContext& ctx, std::span<const double> values, std::span<const std::uint8_t> valid,
                     std::span<double> out) const = 0;
};

class IdentityOperator final : public Operator1D {
 public:
  void apply(const SignalContext&, std::span<const double> values, std::span<const std::uint8_t>,
             std::span<double> out) const override;
};

/// Centered moving average with symmetric (half-sample) boundary extension.
class MovingAverageOperator final : public Operator1D {
 public:
  explicit MovingAverageOperator(std::size_t length);
  void apply(const SignalContext&, std::span<const double> values, std::span<const std::uint8_t>,
             std::span<double> out) const override;

 private:
  std::vector<double> taps_;
};

/// An ordering over a subset of patches. `members` lists global patch
/// indices in increasing order; `order` indexes into `members`.
struct PathSegment {
  std::vector<std::size_t> members;
  Ordering order;
};

/// One permutation P_k: disjoint segments that together cover every patch.
using PathPlan = std::vector<PathSegment>;

/// Builds K plans from the patches of a guide image. With `labels`, patches
/// are split by label (0 .. classes-1) and each class gets its own ordering.
/// Seeds for every (plan, class) are drawn in order from one generator seeded
/// with `seed`, so the result does not depend on `threads`.
std::vector<PathPlan> build_plans(const PatchSet& patches, DistanceKind kind, const SolverParams& solver,
                                  std::size_t K, std::uint64_t seed, std::span<const std::uint8_t> labels = {},
                                  std::size_t classes = 1, std::size_t threads = 1, OrderingStats* stats = nullptr);

/// The reconstruction with frozen orderings:
///   y = (1/K) sum_k D^-1 sum_j R_j^T P_k^-1 H{P_k R_j z}.
/// Per-sample validity passed to H is the mask bit of each permuted sample.
Image apply_plans(const Image& z, const PixelMask& mask, std::span<const PathPlan> plans, std::size_t patch_side,
                  const Operator1D& op, std::size_t threads = 1);

struct PipelineConfig {
  std::size_t K = 10;
  std::size_t patch_side = 8;
  SolverParams solver;
  /// Unset: masked_mean when the mask has a missing pixel, else euclidean_mean.
  std::optional<DistanceKind> distance;
  const Operator1D* op = nullptr;
  std::uint64_t rng_seed = 0;
  std::size_t threads = 1;
};

/// Progress report handed to per-iteration callbacks.
struct IterationInfo {
  std::size_t index = 0;  // 0-based
  const Image* estimate = nullptr;
  OrderingStats stats;    // this iteration only
  double wall_ms = 0.0;
};
using IterationCallback = std::function<void(const IterationInfo&)>;

/// Builds K orderings from `corrupted` and runs apply_plans.
Image restore(const Image& corrupted, const PixelMask& mask, const PipelineConfig& cfg,
              OrderingStats* stats = nullptr);

/// Iteration 1 is `restore`. Each later iteration orders the full patches of
/// the previous output (euclidean_mean) but still filters the samples of
/// `corrupted` under `mask`. Each iteration's output is appended to
/// `per_iteration` when given.
Image restore_iterated(const Image& corrupted, const PixelMask& mask, std::span<const PipelineConfig> cfgs,
                       std::vector<Image>* per_iteration = nullptr, OrderingStats* stats = nullptr,
                       const IterationCallback& on_iteration = {});

/// For each segment of `plan`, the pixel index of the top-left corner of the
/// patch at every path position. Validates that the plan covers each of the
/// grid_rows x grid_cols patches exactly once.
std::vector<std::vector<std::size_t>> segment_anchors(const PathPlan& plan, std::size_t grid_rows,
                                                      std::size_t grid_cols, std::size_t image_width);

/// Symmetric (half-sample) extension index for any integer position.
std::size_t reflect_index(long long i, std::size_t n);

}  // namespace pord
