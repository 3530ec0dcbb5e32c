#pragma once

// Independent reference implementations used to check the library.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "pord/ordering.hpp"
#include "pord/patches.hpp"

namespace pord::oracle {

inline double plain_mean_sq(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += (a[k] - b[k]) * (a[k] - b[k]);
  return s / static_cast<double>(a.size());
}

inline std::optional<double> plain_masked(const PatchSet& ps, std::size_t p, std::size_t q) {
  const auto a = ps.patch(p), b = ps.patch(q);
  const auto va = ps.visibility(p), vb = ps.visibility(q);
  double s = 0.0;
  std::size_t c = 0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    if (va[k] && vb[k]) {
      s += (a[k] - b[k]) * (a[k] - b[k]);
      ++c;
    }
  }
  if (c == 0) return std::nullopt;
  return s / static_cast<double>(c);
}

/// Deterministic nearest-neighbor chaining over all patches, ties to the
/// lowest index. Returns the visiting order.
inline std::vector<std::size_t> nn_chain(const PatchSet& ps, std::size_t start) {
  const std::size_t m = ps.count();
  std::vector<bool> used(m, false);
  std::vector<std::size_t> out{start};
  used[start] = true;
  for (std::size_t step = 1; step < m; ++step) {
    const std::size_t cur = out.back();
    double best = std::numeric_limits<double>::infinity();
    std::size_t arg = m;
    for (std::size_t q = 0; q < m; ++q) {
      if (used[q]) continue;
      const double d = plain_mean_sq(ps.patch(cur), ps.patch(q));
      if (d < best) {
        best = d;
        arg = q;
      }
    }
    used[arg] = true;
    out.push_back(arg);
  }
  return out;
}

/// Cost of the cheapest Hamiltonian path from `start`, by enumerating every
/// order of the remaining patches.
inline double brute_force_path_cost(const PatchSet& ps, std::size_t start) {
  std::vector<std::size_t> rest;
  for (std::size_t p = 0; p < ps.count(); ++p)
    if (p != start) rest.push_back(p);
  double best = std::numeric_limits<double>::infinity();
  do {
    double c = 0.0;
    std::size_t prev = start;
    for (std::size_t q : rest) {
      c += plain_mean_sq(ps.patch(prev), ps.patch(q));
      prev = q;
    }
    best = std::min(best, c);
  } while (std::next_permutation(rest.begin(), rest.end()));
  return best;
}

/// Sum of w over consecutive pairs of a whole-set ordering, skipping spatial
/// fallback steps.
inline double recompute_cost(const PatchSet& ps, const Ordering& ord, DistanceKind kind) {
  double c = 0.0;
  for (std::size_t k = 1; k < ord.size(); ++k) {
    if (!ord.steps.empty() && ord.steps[k] == StepKind::spatial) continue;
    const std::size_t a = ord.forward[k - 1], b = ord.forward[k];
    c += kind == DistanceKind::euclidean_mean ? plain_mean_sq(ps.patch(a), ps.patch(b)) : *plain_masked(ps, a, b);
  }
  return c;
}

/// Replays a whole-set ordering and checks that every successor lies inside
/// the B x B window whenever the window still holds a usable unvisited patch,
/// and that fallback steps happen only when it does not. Returns an empty
/// string on success, else a description of the first violation.
inline std::string check_window_respect(const PatchSet& ps, const Ordering& ord, DistanceKind kind,
                                        std::size_t window_side) {
  const std::size_t lo = (window_side - 1) / 2, hi = window_side / 2;
  std::vector<bool> used(ps.count(), false);
  used[ord.forward[0]] = true;
  auto in_window = [&](std::size_t from, std::size_t q) {
    const PatchCoord a = ps.coord(from), b = ps.coord(q);
    return b.row + lo >= a.row && b.row <= a.row + hi && b.col + lo >= a.col && b.col <= a.col + hi;
  };
  for (std::size_t k = 1; k < ord.size(); ++k) {
    const std::size_t cur = ord.forward[k - 1], next = ord.forward[k];
    bool usable = false;
    for (std::size_t q = 0; q < ps.count() && !usable; ++q) {
      if (used[q] || !in_window(cur, q)) continue;
      usable = kind == DistanceKind::euclidean_mean || plain_masked(ps, cur, q).has_value();
    }
    if (usable) {
      if (!in_window(cur, next)) return "step " + std::to_string(k) + " left a non-empty window";
      if (!ord.steps.empty() && ord.steps[k] != StepKind::window) return "step " + std::to_string(k) + " mislabeled";
    } else if (!ord.steps.empty() && ord.steps[k] == StepKind::window) {
      return "step " + std::to_string(k) + " claims a window hit on an empty window";
    }
    used[next] = true;
  }
  return {};
}

}  // namespace pord::oracle
