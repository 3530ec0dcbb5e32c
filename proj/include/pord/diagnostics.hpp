#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "pord/image.hpp"
#include "pord/ordering.hpp"
#include "pord/patches.hpp"

namespace pord {

/// Spatial distances between consecutive patches of a path.
struct SpatialHistogram {
  double bin_width = 1.0;
  std::vector<double> mass;      // normalized counts, bin b covers [b*w, (b+1)*w)
  std::vector<double> bin_sums;  // raw distances summed per bin
  std::size_t pairs = 0;
  std::size_t near_pairs = 0;    // pairs at distance <= sqrt(2)
  double total_length = 0.0;

  double near_fraction() const { return pairs ? double(near_pairs) / double(pairs) : 0.0; }
};

/// Histogram of Euclidean distances between the top-left corners of
/// consecutive patches. `coords[i]` is the position of ordered item i.
SpatialHistogram spatial_distance_histogram(const Ordering& ord, std::span<const PatchCoord> coords,
                                            double bin_width = 1.0);
/// Same for an ordering over every patch of `patches`.
SpatialHistogram spatial_distance_histogram(const Ordering& ord, const PatchSet& patches, double bin_width = 1.0);

struct PerfProbeParams {
  std::size_t K = 10;
  std::size_t patch_side = 8;
  std::size_t window = 111;
  double epsilon = 1e6;
  std::uint64_t seed = 0;
  std::size_t threads = 1;
};

/// Work counters of K ordering builds together with the operation-count
/// models they are compared against.
struct PerfReport {
  PerfProbeParams params;
  std::size_t patches = 0;  // N, the number of patches ordered per plan
  std::size_t dim = 0;      // n
  OrderingStats stats;
  double wall_ms = 0.0;

  /// N K n B: the figure quoted for 512 x 512 images (1.86e10 for K=10,
  /// n=64, B=111).
  double quoted_ops() const;
  /// N K B^2 n: one n-dimensional distance per window cell per step.
  double window_model_ops() const;
  /// N K B^2: upper bound on distance evaluations spent in window scans.
  double window_eval_bound() const;
  /// Distance evaluations per (step x window cell).
  double evals_per_window_cell() const;
};

/// Builds K Euclidean orderings of the patches of `img` and reports the work.
PerfReport perf_probe(const Image& img, const PerfProbeParams& params);

}  // namespace pord
