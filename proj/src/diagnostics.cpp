#include "pord/diagnostics.hpp"

#include <chrono>
#include <cmath>
#include <stdexcept>

#include "pord/pipeline.hpp"

namespace pord {

SpatialHistogram spatial_distance_histogram(const Ordering& ord, std::span<const PatchCoord> coords,
                                            double bin_width) {
  if (!(bin_width > 0.0)) throw std::invalid_argument("bin width must be > 0");
  if (coords.size() != ord.size()) throw DimensionError("coordinate count does not match ordering");
  SpatialHistogram h;
  h.bin_width = bin_width;
  for (std::size_t k = 1; k < ord.size(); ++k) {
    const PatchCoord a = coords[ord.forward[k - 1]];
    const PatchCoord b = coords[ord.forward[k]];
    const double dr = double(a.row) - double(b.row);
    const double dc = double(a.col) - double(b.col);
    const double d2 = dr * dr + dc * dc;
    const double d = std::sqrt(d2);
    const auto bin = static_cast<std::size_t>(d / bin_width);
    if (bin >= h.mass.size()) {
      h.mass.resize(bin + 1, 0.0);
      h.bin_sums.resize(bin + 1, 0.0);
    }
    h.mass[bin] += 1.0;
    h.bin_sums[bin] += d;
    h.near_pairs += d2 <= 2.0;
    ++h.pairs;
  }
  for (double& m : h.mass) m /= double(h.pairs);
  for (double s : h.bin_sums) h.total_length += s;
  return h;
}

SpatialHistogram spatial_distance_histogram(const Ordering& ord, const PatchSet& patches, double bin_width) {
  std::vector<PatchCoord> coords(patches.count());
  for (std::size_t p = 0; p < coords.size(); ++p) coords[p] = patches.coord(p);
  return spatial_distance_histogram(ord, coords, bin_width);
}

double PerfReport::quoted_ops() const {
  return double(patches) * double(params.K) * double(dim) * double(params.window);
}

double PerfReport::window_model_ops() const {
  return double(patches) * double(params.K) * double(params.window) * double(params.window) * double(dim);
}

double PerfReport::window_eval_bound() const {
  return double(patches) * double(params.K) * double(params.window) * double(params.window);
}

double PerfReport::evals_per_window_cell() const {
  return stats.window_cells ? double(stats.distance_evals) / double(stats.window_cells) : 0.0;
}

PerfReport perf_probe(const Image& img, const PerfProbeParams& params) {
  PerfReport r;
  r.params = params;
  const PatchSet ps(img, params.patch_side);
  r.patches = ps.count();
  r.dim = ps.dim();
  SolverParams solver;
  solver.window_side = params.window;
  solver.epsilon = params.epsilon;
  const auto t0 = std::chrono::steady_clock::now();
  build_plans(ps, DistanceKind::euclidean_mean, solver, params.K, params.seed, {}, 1, params.threads, &r.stats);
  r.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

}  // namespace pord
