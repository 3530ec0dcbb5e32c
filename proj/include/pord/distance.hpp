#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <cstring>
#include <limits>
#include <optional>
#include <span>
#include <vector>

namespace pord {

enum class DistanceKind {
  euclidean_mean,  // (1/n) |a - b|^2
  masked_mean,     // mean squared difference over pixels observed in both
};

namespace detail {

// Sum of squared differences. Gives up and returns a partial sum as soon as
// the running total exceeds `bound`; the partial sum is then also > bound.
// Uses four interleaved accumulators in a fixed order, so a completed sum is
// bit-identical whatever `bound` was.
inline double squared_diff_sum(const double* a, const double* b, std::size_t n,
                               double bound = std::numeric_limits<double>::infinity()) {
#if defined(__GNUC__)
  // lane i of acc is accumulator s_i below
  typedef double v4d __attribute__((vector_size(32)));
  v4d acc = {0.0, 0.0, 0.0, 0.0};
  const std::size_t n4 = n & ~std::size_t{3};
  std::size_t k = 0;
  while (k < n4) {
    const std::size_t end = std::min(n4, k + 16);
    for (; k < end; k += 4) {
      v4d va, vb;
      std::memcpy(&va, a + k, sizeof va);
      std::memcpy(&vb, b + k, sizeof vb);
      const v4d d = va - vb;
      acc += d * d;
    }
    const double partial = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    if (partial > bound) return partial;
  }
  double s0 = acc[0];
  for (; k < n; ++k) {
    const double d = a[k] - b[k];
    s0 += d * d;
  }
  return (s0 + acc[1]) + (acc[2] + acc[3]);
#else
  double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
  const std::size_t n4 = n & ~std::size_t{3};
  std::size_t k = 0;
  while (k < n4) {
    const std::size_t end = std::min(n4, k + 16);
    for (; k < end; k += 4) {
      const double d0 = a[k] - b[k];
      const double d1 = a[k + 1] - b[k + 1];
      const double d2 = a[k + 2] - b[k + 2];
      const double d3 = a[k + 3] - b[k + 3];
      s0 += d0 * d0;
      s1 += d1 * d1;
      s2 += d2 * d2;
      s3 += d3 * d3;
    }
    const double partial = (s0 + s1) + (s2 + s3);
    if (partial > bound) return partial;
  }
  for (; k < n; ++k) {
    const double d = a[k] - b[k];
    s0 += d * d;
  }
  return (s0 + s1) + (s2 + s3);
#endif
}

struct MaskedSum {
  double sum = 0.0;
  std::size_t overlap = 0;
};

inline MaskedSum masked_squared_diff_sum(const double* a, const double* b, const std::uint8_t* va,
                                         const std::uint8_t* vb, std::size_t n) {
  double s0 = 0.0, s1 = 0.0;
  std::size_t c = 0;
  std::size_t k = 0;
  for (; k + 2 <= n; k += 2) {
    const unsigned m0 = va[k] & vb[k];
    const unsigned m1 = va[k + 1] & vb[k + 1];
    const double d0 = a[k] - b[k];
    const double d1 = a[k + 1] - b[k + 1];
    s0 += m0 ? d0 * d0 : 0.0;
    s1 += m1 ? d1 * d1 : 0.0;
    c += m0 + m1;
  }
  for (; k < n; ++k) {
    const unsigned m = va[k] & vb[k];
    const double d = a[k] - b[k];
    s0 += m ? d * d : 0.0;
    c += m;
  }
  return {s0 + s1, c};
}

}  // namespace detail

double euclidean_mean_distance(std::span<const double> a, std::span<const double> b);

/// Masked mean distance using per-element presence flags. Returns nullopt when
/// the two patches share no observed pixel.
std::optional<double> masked_mean_distance(std::span<const double> a, std::span<const double> b,
                                           std::span<const std::uint8_t> visible_a,
                                           std::span<const std::uint8_t> visible_b);

/// Same, with the observed pixels given as index sets S_a and S_b.
std::optional<double> masked_mean_distance(std::span<const double> a, std::span<const double> b,
                                           std::span<const std::size_t> set_a,
                                           std::span<const std::size_t> set_b);

/// Distance of either kind. For euclidean_mean the visibility spans are
/// ignored. nullopt signals no overlap (masked_mean only).
std::optional<double> patch_distance(std::span<const double> a, std::span<const double> b, DistanceKind kind,
                                     std::span<const std::uint8_t> visible_a = {},
                                     std::span<const std::uint8_t> visible_b = {});

}  // namespace pord
