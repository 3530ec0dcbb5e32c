#include "pord/distance.hpp"

#include <algorithm>
#include <stdexcept>

#include "pord/image.hpp"

namespace pord {
namespace {

void require_same_dim(std::size_t a, std::size_t b) {
  if (a != b) throw DimensionError("patch dimensions differ: " + std::to_string(a) + " vs " + std::to_string(b));
}

}  // namespace

double euclidean_mean_distance(std::span<const double> a, std::span<const double> b) {
  require_same_dim(a.size(), b.size());
  if (a.empty()) return 0.0;
  return detail::squared_diff_sum(a.data(), b.data(), a.size()) / static_cast<double>(a.size());
}

std::optional<double> masked_mean_distance(std::span<const double> a, std::span<const double> b,
                                           std::span<const std::uint8_t> visible_a,
                                           std::span<const std::uint8_t> visible_b) {
  require_same_dim(a.size(), b.size());
  require_same_dim(a.size(), visible_a.size());
  require_same_dim(a.size(), visible_b.size());
  const auto s = detail::masked_squared_diff_sum(a.data(), b.data(), visible_a.data(), visible_b.data(), a.size());
  if (s.overlap == 0) return std::nullopt;
  return s.sum / static_cast<double>(s.overlap);
}

std::optional<double> masked_mean_distance(std::span<const double> a, std::span<const double> b,
                                           std::span<const std::size_t> set_a,
                                           std::span<const std::size_t> set_b) {
  require_same_dim(a.size(), b.size());
  std::vector<std::uint8_t> va(a.size(), 0), vb(b.size(), 0);
  for (std::size_t k : set_a) {
    if (k >= a.size()) throw std::out_of_range("visibility index out of range");
    va[k] = 1;
  }
  for (std::size_t k : set_b) {
    if (k >= b.size()) throw std::out_of_range("visibility index out of range");
    vb[k] = 1;
  }
  return masked_mean_distance(a, b, va, vb);
}

std::optional<double> patch_distance(std::span<const double> a, std::span<const double> b, DistanceKind kind,
                                     std::span<const std::uint8_t> visible_a,
                                     std::span<const std::uint8_t> visible_b) {
  if (kind == DistanceKind::euclidean_mean) return euclidean_mean_distance(a, b);
  if (visible_a.empty() || visible_b.empty()) {
    throw std::invalid_argument("masked_mean distance needs visibility for both patches");
  }
  return masked_mean_distance(a, b, visible_a, visible_b);
}

}  // namespace pord
