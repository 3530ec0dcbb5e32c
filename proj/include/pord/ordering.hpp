#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "pord/distance.hpp"
#include "pord/patches.hpp"

namespace pord {

/// How the solver reached a path position.
enum class StepKind : std::uint8_t {
  start,    // first patch of the path
  window,   // nearest / second nearest inside the search window
  global,   // window empty: nearest over every unvisited patch
  spatial,  // masked distance undefined: nearest unvisited patch in the image plane
};

/// A visiting order over `size()` items: forward[k] is the item visited k-th.
struct Ordering {
  std::vector<std::size_t> forward;
  std::vector<std::size_t> inverse;
  /// Per position, how it was reached. Empty for orderings not produced by
  /// the solver (identity, loaded from disk).
  std::vector<StepKind> steps;
  /// Sum of w over consecutive pairs, spatial-fallback steps excluded.
  double path_cost = 0.0;

  std::size_t size() const { return forward.size(); }

  /// Validates that `forward` is a permutation and fills `inverse`.
  static Ordering from_forward(std::vector<std::size_t> forward, double path_cost = 0.0);
  static Ordering identity(std::size_t n);

  std::size_t spatial_steps() const;
};

/// Settings of the randomized greedy path solver.
struct SolverParams {
  /// B: side of the square of patch positions searched around the current
  /// patch. Odd values center the window; even values extend one extra
  /// position toward larger rows/columns.
  std::size_t window_side = 111;
  /// Softness of the nearest / second-nearest choice, in the units of w.
  double epsilon = 1e6;
  std::uint64_t rng_seed = 0;
  /// Forces the first patch (index into the ordered set). Drawn uniformly
  /// from the RNG when unset.
  std::optional<std::size_t> start;

  /// A window side large enough to cover any patch grid.
  static constexpr std::size_t unrestricted = std::size_t{1} << 40;
};

/// Work counters for one or more solver runs.
struct OrderingStats {
  std::uint64_t distance_evals = 0;    // kernel invocations, including early exits
  std::uint64_t window_cells = 0;      // grid cells examined during window scans
  std::uint64_t global_searches = 0;   // empty-window fallbacks over all patches
  std::uint64_t spatial_searches = 0;  // masked fallbacks to the spatial neighbor
  std::uint64_t steps = 0;

  OrderingStats& operator+=(const OrderingStats& o);
};

/// Builds an approximate shortest Hamiltonian path over all patches.
Ordering build_ordering(const PatchSet& patches, DistanceKind kind, const SolverParams& params,
                        OrderingStats* stats = nullptr);

/// Same over a subset of patch indices (strictly increasing). The returned
/// ordering indexes positions within `subset`. An empty subset yields an
/// empty ordering.
Ordering build_ordering(const PatchSet& patches, std::span<const std::size_t> subset, DistanceKind kind,
                        const SolverParams& params, OrderingStats* stats = nullptr);

/// out[k] = signal[forward[k]]
std::vector<double> permute(std::span<const double> signal, const Ordering& ord);
/// out[forward[k]] = signal[k]
std::vector<double> unpermute(std::span<const double> signal, const Ordering& ord);

/// Binary cache format: "PORD-ORD", u64 count, count x u64 forward, f64 path
/// cost, all little-endian.
void save_ordering(const std::filesystem::path& path, const Ordering& ord);
Ordering load_ordering(const std::filesystem::path& path);

}  // namespace pord
