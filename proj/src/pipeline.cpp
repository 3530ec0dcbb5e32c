#include "pord/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <stdexcept>

#include "pord/corruption.hpp"
#include "pord/parallel.hpp"

namespace pord {

std::size_t reflect_index(long long i, std::size_t n) {
  const auto period = static_cast<long long>(2 * n);
  long long r = i % period;
  if (r < 0) r += period;
  return r < static_cast<long long>(n) ? static_cast<std::size_t>(r) : static_cast<std::size_t>(period - 1 - r);
}

void IdentityOperator::apply(const SignalContext&, std::span<const double> values, std::span<const std::uint8_t>,
                             std::span<double> out) const {
  std::copy(values.begin(), values.end(), out.begin());
}

MovingAverageOperator::MovingAverageOperator(std::size_t length) : taps_(length, 1.0 / static_cast<double>(length)) {
  if (length == 0) throw std::invalid_argument("moving average length must be >= 1");
}

void MovingAverageOperator::apply(const SignalContext&, std::span<const double> values,
                                  std::span<const std::uint8_t>, std::span<double> out) const {
  const std::size_t n = values.size();
  const auto center = static_cast<long long>((taps_.size() - 1) / 2);
  for (std::size_t m = 0; m < n; ++m) {
    double acc = 0.0;
    for (std::size_t t = 0; t < taps_.size(); ++t) {
      acc += taps_[t] * values[reflect_index(static_cast<long long>(m) + center - static_cast<long long>(t), n)];
    }
    out[m] = acc;
  }
}

std::vector<PathPlan> build_plans(const PatchSet& patches, DistanceKind kind, const SolverParams& solver,
                                  std::size_t K, std::uint64_t seed, std::span<const std::uint8_t> labels,
                                  std::size_t classes, std::size_t threads, OrderingStats* stats) {
  if (K == 0) throw std::invalid_argument("K must be >= 1");
  if (classes == 0) throw std::invalid_argument("need at least one patch class");
  if (!labels.empty() && labels.size() != patches.count()) {
    throw DimensionError("patch labels do not match patch count");
  }
  std::vector<std::vector<std::size_t>> members(classes);
  for (std::size_t p = 0; p < patches.count(); ++p) {
    const std::size_t c = labels.empty() ? 0 : labels[p];
    if (c >= classes) throw std::out_of_range("patch label out of range");
    members[c].push_back(p);
  }

  Rng master(seed);
  std::vector<std::uint64_t> seeds(K * classes);
  for (auto& s : seeds) s = master();

  std::vector<PathPlan> plans(K, PathPlan(classes));
  std::vector<OrderingStats> per_task(K * classes);
  parallel_for(K * classes, threads, [&](std::size_t task) {
    const std::size_t k = task / classes;
    const std::size_t c = task % classes;
    SolverParams params = solver;
    params.rng_seed = seeds[task];
    params.start.reset();
    plans[k][c].members = members[c];
    plans[k][c].order = build_ordering(patches, members[c], kind, params, &per_task[task]);
  });
  if (stats) {
    for (const auto& s : per_task) *stats += s;
  }
  return plans;
}

std::vector<std::vector<std::size_t>> segment_anchors(const PathPlan& plan, std::size_t grid_rows,
                                                      std::size_t grid_cols, std::size_t image_width) {
  const std::size_t count = grid_rows * grid_cols;
  std::vector<std::uint8_t> seen(count, 0);
  std::vector<std::vector<std::size_t>> anchors;
  anchors.reserve(plan.size());
  std::size_t covered = 0;
  for (const PathSegment& seg : plan) {
    if (seg.order.size() != seg.members.size()) throw DimensionError("path segment ordering/member size mismatch");
    std::vector<std::size_t> a(seg.order.size());
    for (std::size_t m = 0; m < a.size(); ++m) {
      const std::size_t p = seg.members[seg.order.forward[m]];
      if (p >= count) throw std::out_of_range("path segment refers to a patch outside the image");
      if (seen[p]++) throw std::invalid_argument("path plan visits a patch twice");
      a[m] = (p % grid_rows) * image_width + p / grid_rows;
    }
    covered += a.size();
    anchors.push_back(std::move(a));
  }
  if (covered != count) throw DimensionError("path plan does not cover every patch exactly once");
  return anchors;
}

Image apply_plans(const Image& z, const PixelMask& mask, std::span<const PathPlan> plans, std::size_t patch_side,
                  const Operator1D& op, std::size_t threads) {
  if (!mask.matches(z)) throw DimensionError("mask size does not match image");
  if (plans.empty()) throw std::invalid_argument("need at least one path plan");
  if (patch_side == 0 || patch_side > z.height() || patch_side > z.width()) {
    throw std::invalid_argument("patch side does not fit the image");
  }
  const std::size_t rows = z.height() - patch_side + 1;
  const std::size_t W = z.width();
  const std::size_t n = patch_side * patch_side;

  std::vector<std::vector<std::vector<std::size_t>>> anchors(plans.size());
  for (std::size_t k = 0; k < plans.size(); ++k) {
    anchors[k] = segment_anchors(plans[k], rows, z.width() - patch_side + 1, W);
  }

  const Image weights = coverage_weights(z.height(), W, patch_side);
  auto zp = z.pixels();
  auto bits = mask.bits();
  std::vector<Image> canvases(plans.size());
  parallel_for(plans.size(), threads, [&](std::size_t k) {
    Image canvas(z.height(), W);
    auto acc = canvas.pixels();
    std::vector<double> values, out;
    std::vector<std::uint8_t> valid;
    for (std::size_t j = 0; j < n; ++j) {
      const PatchOffset off = offset_of(j, patch_side);
      const std::size_t shift = off.dr * W + off.dc;
      for (std::size_t s = 0; s < anchors[k].size(); ++s) {
        const auto& a = anchors[k][s];
        values.resize(a.size());
        valid.resize(a.size());
        out.assign(a.size(), 0.0);
        for (std::size_t m = 0; m < a.size(); ++m) {
          values[m] = zp[a[m] + shift];
          valid[m] = bits[a[m] + shift];
        }
        op.apply(SignalContext{k, j, s}, values, valid, out);
        for (std::size_t m = 0; m < a.size(); ++m) acc[a[m] + shift] += out[m];
      }
    }
    auto wp = weights.pixels();
    for (std::size_t i = 0; i < acc.size(); ++i) acc[i] /= wp[i];
    canvases[k] = std::move(canvas);
  });

  Image result(z.height(), W);
  auto rp = result.pixels();
  for (const Image& c : canvases) {
    auto cp = c.pixels();
    for (std::size_t i = 0; i < rp.size(); ++i) rp[i] += cp[i];
  }
  const auto K = static_cast<double>(plans.size());
  for (double& v : rp) v /= K;
  return result;
}

Image restore(const Image& corrupted, const PixelMask& mask, const PipelineConfig& cfg, OrderingStats* stats) {
  if (!cfg.op) throw std::invalid_argument("pipeline config has no operator");
  if (!mask.matches(corrupted)) throw DimensionError("mask size does not match image");
  const bool has_missing = !mask.all_true();
  const DistanceKind kind =
      cfg.distance.value_or(has_missing ? DistanceKind::masked_mean : DistanceKind::euclidean_mean);
  const bool need_visibility = kind == DistanceKind::masked_mean;
  const PatchSet patches(corrupted, cfg.patch_side, need_visibility ? &mask : nullptr);
  const auto plans = build_plans(patches, kind, cfg.solver, cfg.K, cfg.rng_seed, {}, 1, cfg.threads, stats);
  return apply_plans(corrupted, mask, plans, cfg.patch_side, *cfg.op, cfg.threads);
}

Image restore_iterated(const Image& corrupted, const PixelMask& mask, std::span<const PipelineConfig> cfgs,
                       std::vector<Image>* per_iteration, OrderingStats* stats,
                       const IterationCallback& on_iteration) {
  if (cfgs.empty()) throw std::invalid_argument("need at least one pipeline config");
  Image estimate;
  for (std::size_t i = 0; i < cfgs.size(); ++i) {
    const PipelineConfig& cfg = cfgs[i];
    if (!cfg.op) throw std::invalid_argument("pipeline config has no operator");
    const auto t0 = std::chrono::steady_clock::now();
    OrderingStats local;
    if (i == 0) {
      estimate = restore(corrupted, mask, cfg, &local);
    } else {
      const PatchSet patches(estimate, cfg.patch_side);
      const auto plans = build_plans(patches, DistanceKind::euclidean_mean, cfg.solver, cfg.K, cfg.rng_seed, {}, 1,
                                     cfg.threads, &local);
      estimate = apply_plans(corrupted, mask, plans, cfg.patch_side, *cfg.op, cfg.threads);
    }
    if (stats) *stats += local;
    if (per_iteration) per_iteration->push_back(estimate);
    if (on_iteration) {
      const std::chrono::duration<double, std::milli> dt = std::chrono::steady_clock::now() - t0;
      on_iteration({i, &estimate, local, dt.count()});
    }
  }
  return estimate;
}

}  // namespace pord
