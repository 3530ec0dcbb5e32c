#include "pord/inpaint.hpp"

#include <chrono>
#include <stdexcept>

#include "pord/corruption.hpp"
#include "pord/patches.hpp"

namespace pord {

std::vector<InpaintIteration> default_inpaint_schedule() {
  // K, patch side, window, epsilon
  return {{10, 16, 9, 1e2}, {10, 8, 43, 1e4}, {10, 5, 55, 1e8}};
}

Image inpaint(const Image& z, const PixelMask& mask, std::span<const InpaintIteration> schedule,
              const InpaintOptions& opts, std::vector<Image>* per_iteration, OrderingStats* stats) {
  if (schedule.empty()) throw std::invalid_argument("empty inpainting schedule");
  if (!mask.matches(z)) throw DimensionError("mask size does not match image");
  if (mask.count_present() < 2) throw InsufficientData("mask keeps fewer than two pixels");
  Rng master(opts.seed);
  const CubicFillOperator op(opts.cubic);
  const bool has_missing = !mask.all_true();
  auto bits = mask.bits();
  auto zp = z.pixels();
  Image estimate;
  for (std::size_t i = 0; i < schedule.size(); ++i) {
    const InpaintIteration& it = schedule[i];
    SolverParams solver;
    solver.window_side = it.window;
    solver.epsilon = it.epsilon;
    const std::uint64_t seed = master();
    const auto t0 = std::chrono::steady_clock::now();
    OrderingStats local;
    std::vector<PathPlan> plans;
    if (i == 0) {
      const DistanceKind kind = has_missing ? DistanceKind::masked_mean : DistanceKind::euclidean_mean;
      const PatchSet patches(z, it.patch_side, has_missing ? &mask : nullptr);
      plans = build_plans(patches, kind, solver, it.K, seed, {}, 1, opts.threads, &local);
    } else {
      const PatchSet patches(estimate, it.patch_side);
      plans = build_plans(patches, DistanceKind::euclidean_mean, solver, it.K, seed, {}, 1, opts.threads, &local);
    }
    estimate = apply_plans(z, mask, plans, it.patch_side, op, opts.threads);
    if (opts.reset_known) {
      auto ep = estimate.pixels();
      for (std::size_t p = 0; p < ep.size(); ++p) {
        if (bits[p]) ep[p] = zp[p];
      }
    }
    if (stats) *stats += local;
    if (per_iteration) per_iteration->push_back(estimate);
    if (opts.on_iteration) {
      const std::chrono::duration<double, std::milli> dt = std::chrono::steady_clock::now() - t0;
      opts.on_iteration({i, &estimate, local, dt.count()});
    }
  }
  return estimate;
}

}  // namespace pord
