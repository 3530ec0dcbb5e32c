#include <cmath>
#include <numeric>

#include "doctest.h"
#include "pord/corruption.hpp"
#include "pord/pipeline.hpp"
#include "test_util.hpp"

using namespace pord;
using pord::testing::max_abs;
using pord::testing::max_abs_diff;
using pord::testing::random_image;

namespace {

PipelineConfig config(std::size_t K, std::size_t side, const Operator1D& op, std::uint64_t seed,
                      std::size_t window = 7) {
  PipelineConfig c;
  c.K = K;
  c.patch_side = side;
  c.solver.window_side = window;
  c.solver.epsilon = 1e6;
  c.op = &op;
  c.rng_seed = seed;
  return c;
}

double variance(const Image& img) {
  const double m = std::accumulate(img.pixels().begin(), img.pixels().end(), 0.0) / double(img.size());
  double v = 0.0;
  for (double x : img.pixels()) v += (x - m) * (x - m);
  return v / double(img.size());
}

// Scales every sample by a per-(plan, offset) factor; linear and context-aware.
class ScaleOperator final : public Operator1D {
 public:
  void apply(const SignalContext& ctx, std::span<const double> values, std::span<const std::uint8_t>,
             std::span<double> out) const override {
    const double f = 1.0 + 0.1 * double(ctx.plan) + 0.01 * double(ctx.offset);
    for (std::size_t m = 0; m < values.size(); ++m) out[m] = f * values[m];
  }
};

// Records what it is handed.
class RecordingOperator final : public Operator1D {
 public:
  mutable std::vector<std::vector<double>> seen;
  mutable std::vector<SignalContext> ctx;
  void apply(const SignalContext& c, std::span<const double> values, std::span<const std::uint8_t>,
             std::span<double> out) const override {
    seen.emplace_back(values.begin(), values.end());
    ctx.push_back(c);
    std::copy(values.begin(), values.end(), out.begin());
  }
};

}  // namespace

TEST_CASE("reflect_index") {
  CHECK(reflect_index(-1, 5) == 0);
  CHECK(reflect_index(-2, 5) == 1);
  CHECK(reflect_index(5, 5) == 4);
  CHECK(reflect_index(6, 5) == 3);
  CHECK(reflect_index(13, 5) == 3);
  CHECK(reflect_index(0, 1) == 0);
  CHECK(reflect_index(-3, 1) == 0);
}

TEST_CASE("identity operator reproduces the input") {
  const IdentityOperator id;
  std::mt19937_64 rng(2);
  for (int t = 0; t < 6; ++t) {
    const Image img = random_image(20 + t, 18 + 2 * t, rng());
    for (std::size_t side : {1u, 3u, 4u}) {
      for (std::size_t K : {1u, 3u}) {
        const Image out = restore(img, PixelMask::all_present(img), config(K, side, id, rng()));
        CHECK(max_abs_diff(out, img) <= 1e-9 * max_abs(img));
      }
    }
  }
}

TEST_CASE("single subimage, single plan: output is unpermute(H(permute(z)))") {
  const Image img = random_image(7, 9, 4);
  const MovingAverageOperator ma(3);
  const PipelineConfig cfg = config(1, 1, ma, 17);
  const Image out = restore(img, PixelMask::all_present(img), cfg);

  const PatchSet ps(img, 1);
  const auto plans = build_plans(ps, DistanceKind::euclidean_mean, cfg.solver, 1, cfg.rng_seed);
  const Ordering& o = plans[0][0].order;
  // column-stacked signal of the image
  std::vector<double> z(img.size());
  for (std::size_t p = 0; p < z.size(); ++p) z[p] = img(p % 7, p / 7);
  const auto zp = permute(z, o);
  std::vector<double> filtered(zp.size());
  ma.apply({}, zp, {}, filtered);
  const auto back = unpermute(filtered, o);
  for (std::size_t p = 0; p < z.size(); ++p) CHECK(out(p % 7, p / 7) == doctest::Approx(back[p]).epsilon(1e-12));
}

TEST_CASE("moving average on a noisy constant image reduces variance") {
  const auto noisy = corrupt(Image(48, 48, 128.0), CorruptionSpec::gaussian(25.0, 5)).image;
  const MovingAverageOperator ma(25);
  const Image out = restore(noisy, PixelMask::all_present(noisy), config(2, 4, ma, 3, 11));
  CHECK(variance(out) < variance(noisy));
  CHECK(variance(out) < 0.25 * variance(noisy));
}

TEST_CASE("restore_iterated with one config equals restore") {
  const Image img = random_image(24, 20, 9);
  const MovingAverageOperator ma(5);
  const PipelineConfig cfg = config(2, 3, ma, 8);
  const std::vector<PipelineConfig> cfgs{cfg};
  std::vector<Image> per;
  const Image a = restore_iterated(img, PixelMask::all_present(img), cfgs, &per);
  CHECK(a == restore(img, PixelMask::all_present(img), cfg));
  CHECK(per.size() == 1);
}

TEST_CASE("later iterations order the estimate but filter the original samples") {
  const Image img = random_image(24, 20, 10);
  const MovingAverageOperator ma(5);
  const IdentityOperator id;
  std::vector<PipelineConfig> cfgs{config(2, 3, ma, 8), config(2, 2, id, 9)};
  std::vector<Image> per;
  const Image out = restore_iterated(img, PixelMask::all_present(img), cfgs, &per);
  REQUIRE(per.size() == 2);
  // identity H on z in iteration 2 gives z back regardless of the orderings
  CHECK(max_abs_diff(out, img) <= 1e-9 * max_abs(img));
  CHECK(max_abs_diff(per[0], img) > 1.0);
}

TEST_CASE("frozen orderings make the pipeline linear for linear H") {
  const Image z1 = random_image(22, 19, 1), z2 = random_image(22, 19, 2);
  const PatchSet ps(z1, 3);
  SolverParams s;
  s.window_side = 9;
  const auto plans = build_plans(ps, DistanceKind::euclidean_mean, s, 3, 44);
  const ScaleOperator op;
  const PixelMask mask = PixelMask::all_present(z1);
  const double alpha = 0.7, beta = -1.9;
  Image mix(22, 19);
  for (std::size_t i = 0; i < mix.size(); ++i) mix.pixels()[i] = alpha * z1.pixels()[i] + beta * z2.pixels()[i];
  const Image lhs = apply_plans(mix, mask, plans, 3, op);
  const Image r1 = apply_plans(z1, mask, plans, 3, op), r2 = apply_plans(z2, mask, plans, 3, op);
  Image rhs(22, 19);
  for (std::size_t i = 0; i < rhs.size(); ++i) rhs.pixels()[i] = alpha * r1.pixels()[i] + beta * r2.pixels()[i];
  CHECK(max_abs_diff(lhs, rhs) <= 1e-9 * max_abs(rhs));
}

TEST_CASE("averaged output lies between the single-plan outputs") {
  const Image img = random_image(20, 20, 3);
  const PatchSet ps(img, 3);
  SolverParams s;
  s.window_side = 5;
  const auto plans = build_plans(ps, DistanceKind::euclidean_mean, s, 4, 7);
  const MovingAverageOperator ma(7);
  const PixelMask mask = PixelMask::all_present(img);
  const Image avg = apply_plans(img, mask, plans, 3, ma);
  std::vector<Image> singles;
  for (const auto& p : plans) singles.push_back(apply_plans(img, mask, std::span(&p, 1), 3, ma));
  for (std::size_t i = 0; i < img.size(); ++i) {
    double lo = 1e300, hi = -1e300;
    for (const auto& s1 : singles) {
      lo = std::min(lo, s1.pixels()[i]);
      hi = std::max(hi, s1.pixels()[i]);
    }
    CHECK(avg.pixels()[i] >= lo - 1e-9);
    CHECK(avg.pixels()[i] <= hi + 1e-9);
  }
}

TEST_CASE("permuted sample m is offset j of patch forward[m]") {
  const Image img = random_image(9, 8, 5);
  const PatchSet ps(img, 3);
  SolverParams s;
  s.window_side = 3;
  const auto plans = build_plans(ps, DistanceKind::euclidean_mean, s, 1, 2);
  const RecordingOperator rec;
  apply_plans(img, PixelMask::all_present(img), plans, 3, rec);
  REQUIRE(rec.seen.size() == 9);
  const Ordering& o = plans[0][0].order;
  for (std::size_t call = 0; call < rec.seen.size(); ++call) {
    const std::size_t j = rec.ctx[call].offset;
    for (std::size_t m = 0; m < o.size(); ++m) CHECK(rec.seen[call][m] == ps.patch(o.forward[m])[j]);
  }
}

TEST_CASE("plans with classes partition the patches") {
  const Image img = random_image(12, 12, 5);
  const PatchSet ps(img, 2);
  std::vector<std::uint8_t> labels(ps.count());
  for (std::size_t p = 0; p < labels.size(); ++p) labels[p] = p % 3 == 0;
  SolverParams s;
  s.window_side = 5;
  const auto plans = build_plans(ps, DistanceKind::euclidean_mean, s, 2, 1, labels, 2);
  REQUIRE(plans.size() == 2);
  for (const auto& plan : plans) {
    CHECK(plan[0].members.size() + plan[1].members.size() == ps.count());
    for (std::size_t p : plan[1].members) CHECK(labels[p] == 1);
    CHECK_NOTHROW(segment_anchors(plan, ps.grid_rows(), ps.grid_cols(), 12));
  }
  // identity H with split plans still reproduces the input
  const IdentityOperator id;
  const Image out = apply_plans(img, PixelMask::all_present(img), plans, 2, id);
  CHECK(max_abs_diff(out, img) <= 1e-9 * max_abs(img));
}

TEST_CASE("results do not depend on the thread count") {
  const Image img = random_image(30, 28, 6);
  const MovingAverageOperator ma(5);
  PipelineConfig cfg = config(4, 3, ma, 10);
  const Image a = restore(img, PixelMask::all_present(img), cfg);
  cfg.threads = 3;
  CHECK(restore(img, PixelMask::all_present(img), cfg) == a);
  cfg.threads = 8;
  CHECK(restore(img, PixelMask::all_present(img), cfg) == a);
}

TEST_CASE("pipeline error paths") {
  const Image img = random_image(10, 10, 1);
  const IdentityOperator id;
  PipelineConfig cfg = config(0, 2, id, 1);
  CHECK_THROWS(restore(img, PixelMask::all_present(img), cfg));
  cfg = config(1, 11, id, 1);
  CHECK_THROWS(restore(img, PixelMask::all_present(img), cfg));
  cfg = config(1, 2, id, 1);
  CHECK_THROWS_AS(restore(img, PixelMask(9, 10), cfg), DimensionError);
  cfg.op = nullptr;
  CHECK_THROWS(restore(img, PixelMask::all_present(img), cfg));
  CHECK_THROWS(MovingAverageOperator(0));
}
