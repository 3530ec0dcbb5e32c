#include "pord/ordering.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>

#include "pord/corruption.hpp"
#include "pord/image_io.hpp"

namespace pord {

Ordering Ordering::from_forward(std::vector<std::size_t> forward, double path_cost) {
  Ordering o;
  const std::size_t n = forward.size();
  o.inverse.assign(n, n);
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t f = forward[k];
    if (f >= n || o.inverse[f] != n) throw std::invalid_argument("forward array is not a permutation");
    o.inverse[f] = k;
  }
  o.forward = std::move(forward);
  o.path_cost = path_cost;
  return o;
}

Ordering Ordering::identity(std::size_t n) {
  std::vector<std::size_t> f(n);
  std::iota(f.begin(), f.end(), std::size_t{0});
  return from_forward(std::move(f));
}

std::size_t Ordering::spatial_steps() const {
  return static_cast<std::size_t>(std::count(steps.begin(), steps.end(), StepKind::spatial));
}

OrderingStats& OrderingStats::operator+=(const OrderingStats& o) {
  distance_evals += o.distance_evals;
  window_cells += o.window_cells;
  global_searches += o.global_searches;
  spatial_searches += o.spatial_searches;
  steps += o.steps;
  return *this;
}

namespace {

constexpr std::size_t npos = std::numeric_limits<std::size_t>::max();

// Single-precision sum of squared differences.
float screen_sum(const float* a, const float* b, std::size_t n) {
  std::size_t k = 0;
  float s = 0.0f;
#if defined(__GNUC__)
  typedef float v8f __attribute__((vector_size(32)));
  v8f acc0 = {}, acc1 = {};
  const std::size_t n16 = n & ~std::size_t{15};
  for (; k < n16; k += 16) {
    v8f a0, a1, b0, b1;
    std::memcpy(&a0, a + k, sizeof a0);
    std::memcpy(&a1, a + k + 8, sizeof a1);
    std::memcpy(&b0, b + k, sizeof b0);
    std::memcpy(&b1, b + k + 8, sizeof b1);
    const v8f d0 = a0 - b0, d1 = a1 - b1;
    acc0 += d0 * d0;
    acc1 += d1 * d1;
  }
  const v8f acc = acc0 + acc1;
  s = ((acc[0] + acc[1]) + (acc[2] + acc[3])) + ((acc[4] + acc[5]) + (acc[6] + acc[7]));
#endif
  for (; k < n; ++k) {
    const float d = a[k] - b[k];
    s += d * d;
  }
  return s;
}

// Keeps the best `cap` (1 or 2) candidates by (key, index), lowest first.
struct Best {
  std::size_t cap;
  std::size_t n = 0;
  double key[2] = {0.0, 0.0};
  double w[2] = {0.0, 0.0};
  std::size_t idx[2] = {npos, npos};

  explicit Best(std::size_t capacity) : cap(capacity) {}

  bool full() const { return n == cap; }
  double bound() const { return full() ? key[cap - 1] : std::numeric_limits<double>::infinity(); }

  static bool less(double ka, std::size_t ia, double kb, std::size_t ib) {
    return ka < kb || (ka == kb && ia < ib);
  }

  void offer(double k, std::size_t i, double dist) {
    if (full() && !less(k, i, key[cap - 1], idx[cap - 1])) return;
    std::size_t pos = std::min(n, cap - 1);
    if (n < cap) ++n;
    while (pos > 0 && less(k, i, key[pos - 1], idx[pos - 1])) {
      key[pos] = key[pos - 1];
      w[pos] = w[pos - 1];
      idx[pos] = idx[pos - 1];
      --pos;
    }
    key[pos] = k;
    w[pos] = dist;
    idx[pos] = i;
  }
};

// Items sorted by patch mean, with union-find skip links so removed items are
// stepped over in amortized constant time. Positions 0 and m+1 are sentinels.
class MeanIndex {
 public:
  MeanIndex(std::vector<double> means) : means_(std::move(means)) {
    const std::size_t m = means_.size();
    order_.resize(m);
    std::iota(order_.begin(), order_.end(), std::size_t{0});
    std::sort(order_.begin(), order_.end(), [&](std::size_t a, std::size_t b) {
      return means_[a] < means_[b] || (means_[a] == means_[b] && a < b);
    });
    pos_.resize(m);
    for (std::size_t p = 0; p < m; ++p) pos_[order_[p]] = p + 1;
    by_pos_.resize(m + 2, 0.0);
    for (std::size_t p = 0; p < m; ++p) by_pos_[p + 1] = means_[order_[p]];
    right_.resize(m + 2);
    left_.resize(m + 2);
    std::iota(right_.begin(), right_.end(), std::size_t{0});
    std::iota(left_.begin(), left_.end(), std::size_t{0});
  }

  std::size_t size() const { return order_.size(); }
  double mean(std::size_t item) const { return means_[item]; }
  double mean_at(std::size_t p) const { return by_pos_[p]; }
  std::size_t position(std::size_t item) const { return pos_[item]; }
  std::size_t item_at(std::size_t p) const { return order_[p - 1]; }
  bool is_sentinel(std::size_t p) const { return p == 0 || p == order_.size() + 1; }

  void remove(std::size_t item) {
    const std::size_t p = pos_[item];
    right_[p] = p + 1;
    left_[p] = p - 1;
  }

  // first live position >= p
  std::size_t next_right(std::size_t p) { return find(right_, p); }
  // last live position <= p
  std::size_t next_left(std::size_t p) { return find(left_, p); }

 private:
  static std::size_t find(std::vector<std::size_t>& link, std::size_t p) {
    while (link[p] != p) {
      link[p] = link[link[p]];
      p = link[p];
    }
    return p;
  }

  std::vector<double> means_;
  std::vector<double> by_pos_;
  std::vector<std::size_t> order_;
  std::vector<std::size_t> pos_;
  std::vector<std::size_t> right_;
  std::vector<std::size_t> left_;
};

class PathBuilder {
 public:
  PathBuilder(const PatchSet& patches, std::span<const std::size_t> members, DistanceKind kind,
              const SolverParams& params)
      : ps_(patches), members_(members), kind_(kind), params_(params), rng_(params.rng_seed), dim_(patches.dim()) {
    if (kind_ == DistanceKind::masked_mean && !ps_.has_visibility()) {
      throw std::invalid_argument("masked_mean ordering needs a patch set built with a mask");
    }
    if (params_.window_side == 0) throw std::invalid_argument("window side must be >= 1");
    if (!(params_.epsilon > 0.0)) throw std::invalid_argument("epsilon must be > 0");
    const std::size_t m = members_.size();
    grid_rows_ = ps_.grid_rows();
    grid_cols_ = ps_.grid_cols();
    local_of_.assign(ps_.count(), npos);
    for (std::size_t i = 0; i < m; ++i) {
      const std::size_t g = members_[i];
      if (g >= ps_.count() || (i > 0 && g <= members_[i - 1])) {
        throw std::invalid_argument("patch subset must be strictly increasing and in range");
      }
      local_of_[g] = i;
    }
    unvisited_.resize(m);
    std::iota(unvisited_.begin(), unvisited_.end(), std::size_t{0});
    where_ = unvisited_;
    half_lo_ = (params_.window_side - 1) / 2;
    half_hi_ = params_.window_side / 2;
    const std::size_t extent = std::max(grid_rows_, grid_cols_) - 1;
    window_covers_all_ = std::min(half_lo_, half_hi_) >= extent;
    if (kind_ == DistanceKind::euclidean_mean) {
      std::vector<double> means(m);
      for (std::size_t i = 0; i < m; ++i) {
        const auto p = patch(i);
        means[i] = std::accumulate(p.begin(), p.end(), 0.0) / static_cast<double>(dim_);
      }
      means_.emplace(std::move(means));
      if (window_covers_all_ && m > 0) {
        // single-precision patch rows in mean order: the outward scan of
        // search_global then streams half the bytes, sequentially
        screen_.resize(m * dim_);
        norms_.resize(m);
        for (std::size_t p = 0; p < m; ++p) {
          const auto src = patch(means_->item_at(p + 1));
          std::transform(src.begin(), src.end(), screen_.begin() + p * dim_,
                         [](double v) { return static_cast<float>(v); });
          norms_[p] = std::sqrt(std::inner_product(src.begin(), src.end(), src.begin(), 0.0));
        }
        max_norm_ = *std::max_element(norms_.begin(), norms_.end());
        const double u = std::ldexp(1.0, -24);
        screen_gamma_ = 2.0 * static_cast<double>(dim_ + 3) * u;
      }
    }
  }

  Ordering run(OrderingStats* stats) {
    const std::size_t m = members_.size();
    Ordering ord;
    if (m == 0) return ord;
    ord.forward.reserve(m);
    ord.steps.reserve(m);

    std::size_t current;
    if (params_.start) {
      if (*params_.start >= m) throw std::out_of_range("forced start index out of range");
      current = *params_.start;
    } else {
      current = std::uniform_int_distribution<std::size_t>(0, m - 1)(rng_);
    }
    visit(current);
    ord.forward.push_back(current);
    ord.steps.push_back(StepKind::start);

    double cost = 0.0;
    while (!unvisited_.empty()) {
      Best best(2);
      if (window_covers_all_ && kind_ == DistanceKind::euclidean_mean) {
        search_global(current, best);
      } else {
        search_window(current, best);
      }
      StepKind how = StepKind::window;
      std::size_t next;
      double w;
      if (best.n == 0) {
        if (kind_ == DistanceKind::euclidean_mean) {
          Best nearest(1);
          search_global(current, nearest);
          ++stats_.global_searches;
          how = StepKind::global;
          next = nearest.idx[0];
          w = nearest.w[0];
        } else {
          ++stats_.spatial_searches;
          how = StepKind::spatial;
          next = spatial_nearest(current);
          w = 0.0;
        }
      } else if (best.n == 1) {
        next = best.idx[0];
        w = best.w[0];
      } else {
        // p1 = e^{-w1/eps} / (e^{-w1/eps} + e^{-w2/eps})
        const double p1 = 1.0 / (1.0 + std::exp(-(best.w[1] - best.w[0]) / params_.epsilon));
        const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng_);
        const std::size_t pick = u < p1 ? 0 : 1;
        next = best.idx[pick];
        w = best.w[pick];
      }
      if (how != StepKind::spatial) cost += w;
      visit(next);
      ord.forward.push_back(next);
      ord.steps.push_back(how);
      current = next;
    }
    stats_.steps += m - 1;

    Ordering out = Ordering::from_forward(std::move(ord.forward), cost);
    out.steps = std::move(ord.steps);
    if (stats) *stats += stats_;
    return out;
  }

 private:
  std::span<const double> patch(std::size_t local) const { return ps_.patch(members_[local]); }
  PatchCoord coord(std::size_t local) const { return ps_.coord(members_[local]); }

  void visit(std::size_t local) {
    const std::size_t slot = where_[local];
    const std::size_t last = unvisited_.back();
    unvisited_[slot] = last;
    where_[last] = slot;
    unvisited_.pop_back();
    where_[local] = npos;
    if (means_) means_->remove(local);
  }

  bool is_open(std::size_t local) const { return where_[local] != npos; }

  void evaluate(std::size_t from, std::size_t cand, Best& best) {
    ++stats_.distance_evals;
    if (kind_ == DistanceKind::euclidean_mean) {
      const double bound = best.bound();
      const double s = detail::squared_diff_sum(patch(from).data(), patch(cand).data(), dim_, bound);
      if (s > bound) return;
      best.offer(s, cand, s / static_cast<double>(dim_));
    } else {
      const auto s = detail::masked_squared_diff_sum(patch(from).data(), patch(cand).data(),
                                                     ps_.visibility(members_[from]).data(),
                                                     ps_.visibility(members_[cand]).data(), dim_);
      if (s.overlap == 0) return;
      const double w = s.sum / static_cast<double>(s.overlap);
      best.offer(w, cand, w);
    }
  }

  // Euclidean evaluation of `cand`, found at mean-index position `pos`, from
  // `current` at position `from`. With a full candidate list the float rows
  // reject most candidates first. Rounding a row to float moves it by at most
  // u |row|, and the float sum is within a factor (1 + gamma) of the sum of
  // the rounded differences, so a float sum above
  //   (1 + gamma) (sqrt(bound) + u (|a| + max |b|))^2
  // proves the exact sum is above `bound`. Survivors get the exact kernel.
  void evaluate_at(std::size_t current, std::size_t from, std::size_t pos, std::size_t cand, Best& best) {
    if (screen_.empty() || !best.full()) {
      evaluate(current, cand, best);
      return;
    }
    const double bound = best.bound();
    if (bound != screen_bound_ || from != screen_from_) {
      const double u = std::ldexp(1.0, -24);
      const double root = std::sqrt(bound) + u * (norms_[from - 1] + max_norm_) * (1.0 + 1e-9) + 1e-30;
      screen_thresh_ = (1.0 + screen_gamma_) * root * root * (1.0 + 1e-12);
      screen_bound_ = bound;
      screen_from_ = from;
    }
    const float f = screen_sum(screen_.data() + (from - 1) * dim_, screen_.data() + (pos - 1) * dim_, dim_);
    if (f > screen_thresh_) {
      ++stats_.distance_evals;
      return;
    }
    evaluate(current, cand, best);
  }

  void search_window(std::size_t current, Best& best) {
    const PatchCoord c = coord(current);
    const std::size_t r0 = c.row > half_lo_ ? c.row - half_lo_ : 0;
    const std::size_t r1 = std::min(grid_rows_ - 1, c.row + half_hi_);
    const std::size_t c0 = c.col > half_lo_ ? c.col - half_lo_ : 0;
    const std::size_t c1 = std::min(grid_cols_ - 1, c.col + half_hi_);
    const std::size_t cells = (r1 - r0 + 1) * (c1 - c0 + 1);
    if (cells > unvisited_.size()) {
      for (std::size_t cand : unvisited_) {
        const PatchCoord q = coord(cand);
        if (q.row >= r0 && q.row <= r1 && q.col >= c0 && q.col <= c1) evaluate(current, cand, best);
      }
      stats_.window_cells += unvisited_.size();
      return;
    }
    stats_.window_cells += cells;
    for (std::size_t col = c0; col <= c1; ++col) {
      for (std::size_t row = r0; row <= r1; ++row) {
        const std::size_t local = local_of_[col * grid_rows_ + row];
        if (local != npos && is_open(local)) evaluate(current, local, best);
      }
    }
  }

  // Exact search over all unvisited items, pruned by the mean bound
  // |a - b|^2 >= n (mean(a) - mean(b))^2.
  void search_global(std::size_t current, Best& best) {
    MeanIndex& idx = *means_;
    const double mc = idx.mean(current);
    const double n = static_cast<double>(dim_);
    std::size_t p = idx.position(current);
    std::size_t lo = idx.next_left(p - 1);
    std::size_t hi = idx.next_right(p + 1);
    constexpr double inf = std::numeric_limits<double>::infinity();
    for (;;) {
      const double dl = idx.is_sentinel(lo) ? inf : mc - idx.mean_at(lo);
      const double dh = idx.is_sentinel(hi) ? inf : idx.mean_at(hi) - mc;
      const bool take_low = dl <= dh;
      const double d = take_low ? dl : dh;
      if (d == inf) break;
      if (best.full()) {
        const double bound = best.bound();
        if (n * d * d > bound + 1e-9 * (bound + 1.0)) break;
      }
      if (take_low) {
        evaluate_at(current, p, lo, idx.item_at(lo), best);
        lo = idx.next_left(lo - 1);
      } else {
        evaluate_at(current, p, hi, idx.item_at(hi), best);
        hi = idx.next_right(hi + 1);
      }
    }
  }

  // Unvisited item closest to `current` in the image plane, ties to the
  // lowest index. Expands square rings until no closer ring can exist, and
  // falls back to a list scan once the ring area exceeds the unvisited count.
  std::size_t spatial_nearest(std::size_t current) {
    const PatchCoord c = coord(current);
    const auto r = static_cast<long long>(c.row);
    const auto q = static_cast<long long>(c.col);
    const auto rows = static_cast<long long>(grid_rows_);
    const auto cols = static_cast<long long>(grid_cols_);
    long long best_d2 = std::numeric_limits<long long>::max();
    std::size_t best = npos;
    auto offer = [&](std::size_t local) {
      const PatchCoord p = coord(local);
      const long long dr = static_cast<long long>(p.row) - r;
      const long long dc = static_cast<long long>(p.col) - q;
      const long long d2 = dr * dr + dc * dc;
      if (d2 < best_d2 || (d2 == best_d2 && local < best)) {
        best_d2 = d2;
        best = local;
      }
    };
    const long long max_rho = std::max({r, rows - 1 - r, q, cols - 1 - q});
    bool exhausted = true;
    for (long long rho = 1; rho <= max_rho; ++rho) {
      if (best != npos && rho * rho > best_d2) return best;
      if (static_cast<std::size_t>((2 * rho + 1) * (2 * rho + 1)) > 4 * unvisited_.size()) {
        exhausted = false;
        break;
      }
      auto probe = [&](long long rr, long long cc) {
        if (rr < 0 || rr >= rows || cc < 0 || cc >= cols) return;
        const std::size_t local = local_of_[static_cast<std::size_t>(cc * rows + rr)];
        if (local != npos && is_open(local)) offer(local);
      };
      for (long long d = -rho; d <= rho; ++d) {
        probe(r - rho, q + d);
        probe(r + rho, q + d);
      }
      for (long long d = -rho + 1; d <= rho - 1; ++d) {
        probe(r + d, q - rho);
        probe(r + d, q + rho);
      }
    }
    if (exhausted) return best;
    for (std::size_t local : unvisited_) offer(local);
    return best;
  }

  const PatchSet& ps_;
  std::span<const std::size_t> members_;
  DistanceKind kind_;
  SolverParams params_;
  Rng rng_;
  std::size_t dim_;
  std::size_t grid_rows_ = 0;
  std::size_t grid_cols_ = 0;
  std::size_t half_lo_ = 0;
  std::size_t half_hi_ = 0;
  bool window_covers_all_ = false;
  std::vector<std::size_t> local_of_;
  std::vector<std::size_t> unvisited_;
  std::vector<std::size_t> where_;
  std::optional<MeanIndex> means_;
  std::vector<float> screen_;
  std::vector<double> norms_;  // by mean-index position - 1
  double screen_gamma_ = 0.0;
  double max_norm_ = 0.0;
  double screen_bound_ = -1.0;
  double screen_thresh_ = 0.0;
  std::size_t screen_from_ = 0;
  OrderingStats stats_;
};

}  // namespace

Ordering build_ordering(const PatchSet& patches, std::span<const std::size_t> subset, DistanceKind kind,
                        const SolverParams& params, OrderingStats* stats) {
  PathBuilder builder(patches, subset, kind, params);
  return builder.run(stats);
}

Ordering build_ordering(const PatchSet& patches, DistanceKind kind, const SolverParams& params,
                        OrderingStats* stats) {
  std::vector<std::size_t> all(patches.count());
  std::iota(all.begin(), all.end(), std::size_t{0});
  return build_ordering(patches, all, kind, params, stats);
}

std::vector<double> permute(std::span<const double> signal, const Ordering& ord) {
  if (signal.size() != ord.size()) throw DimensionError("permute: signal length does not match ordering");
  std::vector<double> out(signal.size());
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = signal[ord.forward[k]];
  return out;
}

std::vector<double> unpermute(std::span<const double> signal, const Ordering& ord) {
  if (signal.size() != ord.size()) throw DimensionError("unpermute: signal length does not match ordering");
  std::vector<double> out(signal.size());
  for (std::size_t k = 0; k < out.size(); ++k) out[ord.forward[k]] = signal[k];
  return out;
}

namespace {

constexpr char kOrderingMagic[8] = {'P', 'O', 'R', 'D', '-', 'O', 'R', 'D'};

template <typename T>
void put(std::vector<char>& buf, T v) {
  char b[sizeof(T)];
  std::memcpy(b, &v, sizeof(T));
  buf.insert(buf.end(), b, b + sizeof(T));
}

template <typename T>
T get(const std::vector<char>& buf, std::size_t& pos) {
  T v;
  std::memcpy(&v, buf.data() + pos, sizeof(T));
  pos += sizeof(T);
  return v;
}

}  // namespace

void save_ordering(const std::filesystem::path& path, const Ordering& ord) {
  std::vector<char> buf(kOrderingMagic, kOrderingMagic + 8);
  put<std::uint64_t>(buf, ord.size());
  for (std::size_t f : ord.forward) put<std::uint64_t>(buf, f);
  put<double>(buf, ord.path_cost);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!out) throw IoError("write failed for " + path.string());
}

Ordering load_ordering(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<char> buf{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  if (buf.size() < 16) throw IoError("truncated ordering file " + path.string());
  if (std::memcmp(buf.data(), kOrderingMagic, 8) != 0) throw FormatError("bad ordering magic in " + path.string());
  std::size_t pos = 8;
  const auto count = get<std::uint64_t>(buf, pos);
  if ((buf.size() - 16) / 8 < count + 1 || buf.size() != 16 + 8 * count + 8) {
    throw IoError("truncated ordering file " + path.string());
  }
  std::vector<std::size_t> forward(count);
  for (auto& f : forward) f = get<std::uint64_t>(buf, pos);
  const double cost = get<double>(buf, pos);
  return Ordering::from_forward(std::move(forward), cost);
}

}  // namespace pord
