#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "pord/corruption.hpp"
#include "pord/distance.hpp"
#include "pord/image_io.hpp"
#include "pord/ordering.hpp"
#include "test_util.hpp"

using namespace pord;

namespace {

// v(r, c) = r + rows * c: strictly increasing in column-stacked order.
Image ramp(std::size_t h, std::size_t w) {
  Image img(h, w);
  for (std::size_t r = 0; r < h; ++r)
    for (std::size_t c = 0; c < w; ++c) img(r, c) = static_cast<double>(r + h * c);
  return img;
}

SolverParams greedy(std::size_t start, std::size_t window = SolverParams::unrestricted) {
  SolverParams p;
  p.window_side = window;
  p.epsilon = 1e-12;
  p.start = start;
  return p;
}

}  // namespace

TEST_CASE("patch distance examples") {
  const std::vector<double> a{1, 5, 3, 4}, b{0, 2, 2, 3};
  CHECK(euclidean_mean_distance(a, a) == 0.0);
  CHECK(euclidean_mean_distance(std::vector<double>{1, 1, 1, 1}, std::vector<double>{0, 0, 0, 0}) == 1.0);
  const std::vector<std::size_t> sa{0, 1}, sb{1, 3};
  CHECK(*masked_mean_distance(a, b, sa, sb) == 9.0);
  const std::vector<std::uint8_t> va{1, 1, 0, 0}, vb{0, 1, 0, 1};
  CHECK(*masked_mean_distance(a, b, va, vb) == 9.0);
  CHECK_FALSE(masked_mean_distance(a, b, std::vector<std::size_t>{0}, std::vector<std::size_t>{2}).has_value());
  CHECK(*patch_distance(a, a, DistanceKind::masked_mean, va, va) == 0.0);
  CHECK_THROWS_AS(euclidean_mean_distance(a, std::vector<double>{1, 2}), std::invalid_argument);
}

TEST_CASE("early-exit kernel agrees with the full sum when it completes") {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-100, 100);
  for (std::size_t n : {1u, 3u, 4u, 17u, 64u, 81u, 256u}) {
    std::vector<double> a(n), b(n);
    for (auto& v : a) v = u(rng);
    for (auto& v : b) v = u(rng);
    const double full = detail::squared_diff_sum(a.data(), b.data(), n);
    CHECK(full == doctest::Approx(oracle::plain_mean_sq(a, b) * n).epsilon(1e-12));
    CHECK(detail::squared_diff_sum(a.data(), b.data(), n, full) == full);
    CHECK(detail::squared_diff_sum(a.data(), b.data(), n, full * 0.5) > full * 0.5);
  }
}

TEST_CASE("single patch ordering") {
  const PatchSet ps(Image(4, 4, 1.0), 4);
  const Ordering o = build_ordering(ps, DistanceKind::euclidean_mean, {});
  CHECK(o.forward == std::vector<std::size_t>{0});
  CHECK(o.path_cost == 0.0);
}

TEST_CASE("monotone ramp: greedy path is sorted and matches the brute-force optimum") {
  SUBCASE("3x3 grid of 1x1 patches") {
    const PatchSet ps(ramp(3, 3), 1);
    const Ordering o = build_ordering(ps, DistanceKind::euclidean_mean, greedy(0));
    std::vector<std::size_t> sorted(9);
    std::iota(sorted.begin(), sorted.end(), std::size_t{0});
    CHECK(o.forward == sorted);
    CHECK(o.path_cost == doctest::Approx(oracle::brute_force_path_cost(ps, 0)).epsilon(1e-12));
    CHECK(o.path_cost == 8.0);
  }
  SUBCASE("2x2 patches of a 4x4 ramp, uneven value gaps") {
    const PatchSet ps(ramp(4, 4), 2);
    REQUIRE(ps.count() == 9);
    // patch value offset is row + 4 * col, already increasing in patch index
    const Ordering o = build_ordering(ps, DistanceKind::euclidean_mean, greedy(0));
    std::vector<std::size_t> sorted(9);
    std::iota(sorted.begin(), sorted.end(), std::size_t{0});
    CHECK(o.forward == sorted);
    CHECK(o.path_cost == doctest::Approx(14.0));
    CHECK(o.path_cost == doctest::Approx(oracle::brute_force_path_cost(ps, 0)).epsilon(1e-12));
    // the other endpoint walks back down
    const Ordering back = build_ordering(ps, DistanceKind::euclidean_mean, greedy(8));
    std::reverse(sorted.begin(), sorted.end());
    CHECK(back.forward == sorted);
  }
  SUBCASE("shorter than raster order") {
    Image img(6, 6);
    for (std::size_t r = 0; r < 6; ++r)
      for (std::size_t c = 0; c < 6; ++c) img(r, c) = 7.0 * static_cast<double>(r) + 2.0 * static_cast<double>(c * c);
    const PatchSet ps(img, 2);
    const Ordering o = build_ordering(ps, DistanceKind::euclidean_mean, greedy(0));
    const Ordering raster = Ordering::identity(ps.count());
    CHECK(o.path_cost <= oracle::recompute_cost(ps, raster, DistanceKind::euclidean_mean));
  }
}

TEST_CASE("small random instances match nearest-neighbor chaining") {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t h = 3 + trial % 3, w = 3 + (trial / 3) % 3;
    const Image img = pord::testing::random_image(h, w, rng());
    const PatchSet ps(img, 1 + trial % 2);
    const std::size_t start = rng() % ps.count();
    const Ordering o = build_ordering(ps, DistanceKind::euclidean_mean, greedy(start));
    CHECK(o.forward == oracle::nn_chain(ps, start));
  }
}

TEST_CASE("unwindowed greedy path equals reference chaining on up to 200 patches") {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const Image img = pord::testing::random_image(17, 16, seed);
    const PatchSet ps(img, 3);  // 15 x 14 = 210 patches
    const PatchSet small(pord::testing::random_image(14, 16, seed + 10), 2);  // 13 x 15 = 195
    for (const PatchSet* p : {&small}) {
      const Ordering o = build_ordering(*p, DistanceKind::euclidean_mean, greedy(seed * 7 % p->count()));
      CHECK(o.forward == oracle::nn_chain(*p, seed * 7 % p->count()));
      CHECK(o.path_cost == doctest::Approx(oracle::recompute_cost(*p, o, DistanceKind::euclidean_mean)).epsilon(1e-9));
    }
    // a window covering the whole grid behaves as unwindowed
    const Ordering a = build_ordering(ps, DistanceKind::euclidean_mean, greedy(5, 2 * 17));
    CHECK(a.forward == oracle::nn_chain(ps, 5));
  }
}

TEST_CASE("windowed greedy path equals a windowed reference with global fallback") {
  const Image img = pord::testing::random_image(14, 13, 21);
  const PatchSet ps(img, 2);
  for (std::size_t B : {1u, 2u, 3u, 4u, 5u}) {
    const Ordering o = build_ordering(ps, DistanceKind::euclidean_mean, greedy(17, B));
    // reference
    const std::size_t lo = (B - 1) / 2, hi = B / 2;
    std::vector<bool> used(ps.count(), false);
    std::vector<std::size_t> ref{17};
    used[17] = true;
    while (ref.size() < ps.count()) {
      const PatchCoord c = ps.coord(ref.back());
      double best = std::numeric_limits<double>::infinity();
      std::size_t arg = ps.count();
      for (int pass = 0; pass < 2 && arg == ps.count(); ++pass) {
        for (std::size_t q = 0; q < ps.count(); ++q) {
          if (used[q]) continue;
          const PatchCoord d = ps.coord(q);
          const bool inside = d.row + lo >= c.row && d.row <= c.row + hi && d.col + lo >= c.col && d.col <= c.col + hi;
          if (pass == 0 && !inside) continue;
          const double w = oracle::plain_mean_sq(ps.patch(ref.back()), ps.patch(q));
          if (w < best) {
            best = w;
            arg = q;
          }
        }
      }
      used[arg] = true;
      ref.push_back(arg);
    }
    CHECK(o.forward == ref);
    CHECK(oracle::check_window_respect(ps, o, DistanceKind::euclidean_mean, B).empty());
  }
}

TEST_CASE("randomized runs: bijection, cost consistency, window respect") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t h = 4 + rng() % 9, w = 4 + rng() % 9;
    const Image img = pord::testing::random_image(h, w, rng());
    const std::size_t side = 1 + rng() % 3;
    SolverParams params;
    params.window_side = 1 + rng() % 7;
    params.epsilon = std::pow(10.0, static_cast<double>(rng() % 9) - 2.0);
    params.rng_seed = rng();
    const PatchSet ps(img, side);
    const Ordering o = build_ordering(ps, DistanceKind::euclidean_mean, params);
    std::vector<std::size_t> sorted = o.forward;
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t k = 0; k < sorted.size(); ++k) REQUIRE(sorted[k] == k);
    for (std::size_t k = 0; k < o.size(); ++k) REQUIRE(o.inverse[o.forward[k]] == k);
    const double rc = oracle::recompute_cost(ps, o, DistanceKind::euclidean_mean);
    CHECK(std::abs(o.path_cost - rc) <= 1e-9 * std::max(1.0, rc));
    CHECK(oracle::check_window_respect(ps, o, DistanceKind::euclidean_mean, params.window_side).empty());
  }
}

TEST_CASE("determinism and seed sensitivity") {
  const PatchSet ps(pord::testing::random_image(20, 20, 8), 3);
  SolverParams p;
  p.window_side = 7;
  p.epsilon = 1e6;
  p.rng_seed = 123;
  const Ordering a = build_ordering(ps, DistanceKind::euclidean_mean, p);
  const Ordering b = build_ordering(ps, DistanceKind::euclidean_mean, p);
  CHECK(a.forward == b.forward);
  CHECK(a.path_cost == b.path_cost);
  p.rng_seed = 124;
  CHECK(build_ordering(ps, DistanceKind::euclidean_mean, p).forward != a.forward);
}

TEST_CASE("large epsilon mixes nearest and second nearest about evenly") {
  const PatchSet ps(pord::testing::random_image(40, 40, 3), 2);
  SolverParams p;
  p.window_side = SolverParams::unrestricted;
  p.epsilon = 1e12;
  p.rng_seed = 77;
  p.start = 0;
  const Ordering soft = build_ordering(ps, DistanceKind::euclidean_mean, p);
  CHECK(soft.forward != oracle::nn_chain(ps, 0));
  CHECK(soft.path_cost > build_ordering(ps, DistanceKind::euclidean_mean, greedy(0)).path_cost);
}

TEST_CASE("masked ordering: overlap-free patches use the spatial fallback") {
  // every other pixel column missing; 1x1 patches on missing pixels overlap
  // nothing, so each of them is reached through the spatial fallback
  const Image img = pord::testing::random_image(6, 6, 12);
  PixelMask mask(6, 6, true);
  for (std::size_t r = 0; r < 6; ++r)
    for (std::size_t c = 1; c < 6; c += 2) mask.set(r, c, false);
  const PatchSet ps(img, 1, &mask);
  SolverParams p;
  p.window_side = 3;
  p.rng_seed = 9;
  p.start = 0;
  OrderingStats stats;
  const Ordering o = build_ordering(ps, DistanceKind::masked_mean, p, &stats);
  CHECK(stats.spatial_searches > 0);
  CHECK(stats.spatial_searches == o.spatial_steps());
  for (std::size_t k = 1; k < o.size(); ++k) {
    if (o.steps[k] != StepKind::spatial) continue;
    // the spatial successor is a nearest unvisited patch in the plane
    const PatchCoord c = ps.coord(o.forward[k - 1]);
    const PatchCoord n = ps.coord(o.forward[k]);
    auto d2 = [&](PatchCoord q) {
      const double dr = double(q.row) - double(c.row), dc = double(q.col) - double(c.col);
      return dr * dr + dc * dc;
    };
    for (std::size_t j = k + 1; j < o.size(); ++j) CHECK(d2(ps.coord(o.forward[j])) >= d2(n));
  }
  CHECK(oracle::check_window_respect(ps, o, DistanceKind::masked_mean, 3).empty());
  const double rc = oracle::recompute_cost(ps, o, DistanceKind::masked_mean);
  CHECK(o.path_cost == doctest::Approx(rc).epsilon(1e-9));
}

TEST_CASE("masked ordering with an all-true mask never falls back spatially while the window has patches") {
  const Image img = pord::testing::random_image(12, 12, 2);
  const PixelMask mask(12, 12, true);
  const PatchSet ps(img, 2, &mask);
  SolverParams p = greedy(7, 5);
  const Ordering o = build_ordering(ps, DistanceKind::masked_mean, p);
  CHECK(oracle::check_window_respect(ps, o, DistanceKind::masked_mean, 5).empty());
  // with full visibility both distances agree; without a window neither
  // solver needs its fallback, so the greedy paths agree
  const Ordering m = build_ordering(ps, DistanceKind::masked_mean, greedy(7));
  const Ordering e = build_ordering(PatchSet(img, 2), DistanceKind::euclidean_mean, greedy(7));
  CHECK(m.forward == e.forward);
}

TEST_CASE("subset orderings index into the subset") {
  const PatchSet ps(pord::testing::random_image(9, 9, 6), 2);
  const std::vector<std::size_t> subset{1, 4, 9, 10, 33, 48};
  const Ordering o = build_ordering(ps, subset, DistanceKind::euclidean_mean, greedy(0));
  CHECK(o.size() == subset.size());
  CHECK(build_ordering(ps, std::vector<std::size_t>{}, DistanceKind::euclidean_mean, {}).size() == 0);
  CHECK(build_ordering(ps, std::vector<std::size_t>{}, DistanceKind::euclidean_mean, greedy(0))
            .size() == 0);
  CHECK_THROWS(build_ordering(ps, std::vector<std::size_t>{4, 1}, DistanceKind::euclidean_mean, {}));
}

TEST_CASE("permute and unpermute") {
  const Ordering o = Ordering::from_forward({2, 0, 1});
  const std::vector<double> s{10, 20, 30};
  CHECK(permute(s, o) == std::vector<double>{30, 10, 20});
  CHECK(unpermute(std::vector<double>{30, 10, 20}, o) == s);
  CHECK(permute(s, Ordering::identity(3)) == s);
  CHECK(unpermute(s, Ordering::identity(3)) == s);
  CHECK_THROWS_AS(permute(std::vector<double>{1, 2}, o), DimensionError);
  CHECK_THROWS_AS(Ordering::from_forward({0, 0, 1}), std::invalid_argument);

  std::mt19937_64 rng(1);
  std::vector<std::size_t> f(500);
  std::iota(f.begin(), f.end(), std::size_t{0});
  std::shuffle(f.begin(), f.end(), rng);
  const Ordering r = Ordering::from_forward(f);
  std::vector<double> sig(500);
  for (auto& v : sig) v = std::uniform_real_distribution<double>(-1, 1)(rng);
  CHECK(unpermute(permute(sig, r), r) == sig);
}

TEST_CASE("ordering files round-trip") {
  pord::testing::TempDir dir("ord");
  const PatchSet ps(pord::testing::random_image(10, 10, 1), 2);
  SolverParams p;
  p.window_side = 5;
  p.rng_seed = 3;
  const Ordering o = build_ordering(ps, DistanceKind::euclidean_mean, p);
  save_ordering(dir / "o.bin", o);
  CHECK(std::filesystem::file_size(dir / "o.bin") == 8 + 8 + 8 * o.size() + 8);
  const Ordering back = load_ordering(dir / "o.bin");
  CHECK(back.forward == o.forward);
  CHECK(back.inverse == o.inverse);
  CHECK(back.path_cost == o.path_cost);
  {
    std::ofstream bad(dir / "bad.bin", std::ios::binary);
    bad << "NOTMAGIC0000000000000000";
  }
  CHECK_THROWS_AS(load_ordering(dir / "bad.bin"), FormatError);
  CHECK_THROWS_AS(load_ordering(dir / "missing.bin"), IoError);
}
