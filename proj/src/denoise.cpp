#include "pord/denoise.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <stdexcept>

#include <Eigen/Dense>

#include "pord/corruption.hpp"
#include "pord/parallel.hpp"

namespace pord {

std::size_t PatchClassification::smooth_count() const {
  return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), smooth));
}

PatchClassification classify_patches(const PatchSet& patches, double C, double sigma) {
  if (!(sigma >= 0.0)) throw std::invalid_argument("sigma must be >= 0");
  PatchClassification cls;
  cls.C = C;
  cls.sigma = sigma;
  cls.labels.resize(patches.count());
  const double threshold = C * sigma;
  const double n = static_cast<double>(patches.dim());
  for (std::size_t p = 0; p < patches.count(); ++p) {
    const auto x = patches.patch(p);
    double mean = 0.0;
    for (double v : x) mean += v;
    mean /= n;
    double var = 0.0;
    for (double v : x) var += (v - mean) * (v - mean);
    const double sd = std::sqrt(var / n);
    cls.labels[p] = sd < threshold ? PatchClassification::smooth : PatchClassification::edge;
  }
  return cls;
}

SplitOrderings split_orderings(const PatchSet& patches, const PatchClassification& cls, DistanceKind kind,
                               const SolverParams& params, OrderingStats* stats) {
  if (cls.labels.size() != patches.count()) throw DimensionError("classification does not match patch count");
  SplitOrderings out;
  for (std::size_t p = 0; p < patches.count(); ++p) {
    (cls.labels[p] == PatchClassification::smooth ? out.smooth : out.edge).members.push_back(p);
  }
  Rng master(params.rng_seed);
  SolverParams smooth_params = params;
  smooth_params.rng_seed = master();
  SolverParams edge_params = params;
  edge_params.rng_seed = master();
  edge_params.start.reset();
  out.smooth.order = build_ordering(patches, out.smooth.members, kind, smooth_params, stats);
  out.edge.order = build_ordering(patches, out.edge.members, kind, edge_params, stats);
  return out;
}

std::vector<DenoiseIteration> default_denoise_schedule(double sigma) {
  // K, patch side, window, C, epsilon, filter length
  const std::vector<DenoiseIteration> s10 = {{10, 6, 111, 1.6, 1e6, 25}, {10, 4, 441, 0.8, 1e6, 25}};
  const std::vector<DenoiseIteration> s25 = {{10, 8, 111, 1.2, 1e6, 25}, {10, 4, 441, 0.4, 1e6, 25}};
  const std::vector<DenoiseIteration> s50 = {{10, 12, 111, 1.1, 1e6, 25}, {10, 5, 441, 0.2, 1e6, 25}};
  const double d10 = std::abs(sigma - 10.0);
  const double d25 = std::abs(sigma - 25.0);
  const double d50 = std::abs(sigma - 50.0);
  if (d10 <= d25 && d10 <= d50) return s10;
  if (d25 <= d50) return s25;
  return s50;
}

std::vector<PathPlan> build_denoise_plans(const Image& guide, double sigma, const DenoiseIteration& it,
                                          std::uint64_t seed, std::size_t threads, OrderingStats* stats) {
  const PatchSet patches(guide, it.patch_side);
  const PatchClassification cls = classify_patches(patches, it.C, sigma);
  SolverParams solver;
  solver.window_side = it.window;
  solver.epsilon = it.epsilon;
  return build_plans(patches, DistanceKind::euclidean_mean, solver, it.K, seed, cls.labels, 2, threads, stats);
}

QMatrix::QMatrix(std::size_t height, std::size_t width, std::size_t filter_length)
    : height_(height), width_(width), length_(filter_length), data_(height * width * 2 * filter_length, 0.0) {
  if (filter_length == 0) throw std::invalid_argument("filter length must be >= 1");
}

Image QMatrix::apply(std::span<const double> h) const {
  if (h.size() != columns()) throw DimensionError("filter vector length does not match Q");
  Image out(height_, width_);
  auto px = out.pixels();
  for (std::size_t c = 0; c < columns(); ++c) {
    const double hc = h[c];
    if (hc == 0.0) continue;
    const auto col = column(c);
    for (std::size_t i = 0; i < px.size(); ++i) px[i] += hc * col[i];
  }
  return out;
}

QMatrix build_q(const Image& z, std::span<const PathPlan> plans, std::size_t patch_side, std::size_t filter_length,
                std::size_t threads) {
  if (plans.empty()) throw std::invalid_argument("need at least one path plan");
  if (patch_side == 0 || patch_side > z.height() || patch_side > z.width()) {
    throw std::invalid_argument("patch side does not fit the image");
  }
  const std::size_t W = z.width();
  const std::size_t rows = z.height() - patch_side + 1;
  const std::size_t cols = W - patch_side + 1;
  const std::size_t n = patch_side * patch_side;
  const std::size_t L = filter_length;
  std::vector<std::vector<std::vector<std::size_t>>> anchors(plans.size());
  for (std::size_t k = 0; k < plans.size(); ++k) {
    if (plans[k].size() > 2) throw std::invalid_argument("Q needs plans with at most two patch classes");
    anchors[k] = segment_anchors(plans[k], rows, cols, W);
  }

  QMatrix q(z.height(), W, L);
  const auto center = static_cast<long long>((L - 1) / 2);
  auto zp = z.pixels();
  // Tap ranges are independent column blocks; every column is summed in the
  // same (k, j, segment, position) order whatever the grouping.
  const std::size_t groups = std::min(std::max<std::size_t>(threads, 1), L);
  parallel_for(groups, groups, [&](std::size_t g) {
    const std::size_t t0 = g * L / groups;
    const std::size_t t1 = (g + 1) * L / groups;
    std::vector<double> x;
    for (std::size_t k = 0; k < plans.size(); ++k) {
      for (std::size_t j = 0; j < n; ++j) {
        const PatchOffset off = offset_of(j, patch_side);
        const std::size_t shift = off.dr * W + off.dc;
        for (std::size_t s = 0; s < anchors[k].size(); ++s) {
          const auto& a = anchors[k][s];
          const std::size_t len = a.size();
          if (len == 0) continue;
          x.resize(len);
          for (std::size_t m = 0; m < len; ++m) x[m] = zp[a[m] + shift];
          for (std::size_t t = t0; t < t1; ++t) {
            auto col = q.column(s * L + t);
            const long long lag = center - static_cast<long long>(t);
            for (std::size_t m = 0; m < len; ++m) {
              col[a[m] + shift] += x[reflect_index(static_cast<long long>(m) + lag, len)];
            }
          }
        }
      }
    }
  });

  const Image weights = coverage_weights(z.height(), W, patch_side);
  auto wp = weights.pixels();
  const auto K = static_cast<double>(plans.size());
  for (std::size_t c = 0; c < q.columns(); ++c) {
    auto col = q.column(c);
    for (std::size_t i = 0; i < col.size(); ++i) col[i] = col[i] / wp[i] / K;
  }
  return q;
}

FilterTrainer::FilterTrainer(std::size_t filter_length)
    : length_(filter_length), gram_(4 * filter_length * filter_length, 0.0), rhs_(2 * filter_length, 0.0) {
  if (filter_length == 0) throw std::invalid_argument("filter length must be >= 1");
}

void FilterTrainer::add(const QMatrix& q, const Image& clean) {
  if (q.filter_length() != length_) throw DimensionError("Q filter length does not match trainer");
  if (q.height() != clean.height() || q.width() != clean.width()) throw DimensionError("Q and clean image differ in size");
  const auto N = static_cast<Eigen::Index>(q.pixels());
  const auto M = static_cast<Eigen::Index>(q.columns());
  Eigen::Map<const Eigen::MatrixXd> Q(q.data(), N, M);
  Eigen::Map<const Eigen::VectorXd> y(clean.pixels().data(), N);
  Eigen::Map<Eigen::MatrixXd> G(gram_.data(), M, M);
  Eigen::Map<Eigen::VectorXd> b(rhs_.data(), M);
  G.noalias() += Q.transpose() * Q;
  b.noalias() += Q.transpose() * y;
  y_norm2_ += y.squaredNorm();
  ++pairs_;
}

FilterTrainer::Result FilterTrainer::solve(double sigma, int iteration) const {
  if (pairs_ == 0) throw std::logic_error("no training pairs added");
  const auto M = static_cast<Eigen::Index>(2 * length_);
  Eigen::Map<const Eigen::MatrixXd> G(gram_.data(), M, M);
  Eigen::Map<const Eigen::VectorXd> b(rhs_.data(), M);

  // Taps of a class with no samples have all-zero columns; they are left at 0.
  std::vector<Eigen::Index> active;
  for (Eigen::Index i = 0; i < M; ++i) {
    if (G(i, i) > 0.0) active.push_back(i);
  }
  Result result;
  Eigen::VectorXd h = Eigen::VectorXd::Zero(M);
  if (!active.empty()) {
    const auto A = static_cast<Eigen::Index>(active.size());
    Eigen::MatrixXd Ga(A, A);
    Eigen::VectorXd ba(A);
    for (Eigen::Index r = 0; r < A; ++r) {
      ba(r) = b(active[r]);
      for (Eigen::Index c = 0; c < A; ++c) Ga(r, c) = G(active[r], active[c]);
    }
    Eigen::LLT<Eigen::MatrixXd> llt(Ga);
    Eigen::VectorXd ha;
    if (llt.info() == Eigen::Success && llt.rcond() > 1e-14) {
      ha = llt.solve(ba);
    } else {
      result.ridge_applied = true;
      result.ridge_lambda = 1e-8 * Ga.trace() / static_cast<double>(M);
      Eigen::MatrixXd reg = Ga;
      reg.diagonal().array() += result.ridge_lambda;
      ha = reg.ldlt().solve(ba);
    }
    for (Eigen::Index r = 0; r < A; ++r) h(active[r]) = ha(r);
  }
  result.bank = FilterBank::from_stacked(std::span<const double>(h.data(), static_cast<std::size_t>(M)), sigma,
                                         iteration);
  return result;
}

double FilterTrainer::residual(std::span<const double> h) const {
  if (h.size() != 2 * length_) throw DimensionError("filter vector length does not match trainer");
  const auto M = static_cast<Eigen::Index>(2 * length_);
  Eigen::Map<const Eigen::MatrixXd> G(gram_.data(), M, M);
  Eigen::Map<const Eigen::VectorXd> b(rhs_.data(), M);
  Eigen::Map<const Eigen::VectorXd> hv(h.data(), M);
  return y_norm2_ - 2.0 * hv.dot(b) + hv.dot(G * hv);
}

namespace {

std::vector<std::uint64_t> draw_seeds(std::uint64_t seed, std::size_t count) {
  Rng master(seed);
  std::vector<std::uint64_t> seeds(count);
  for (auto& s : seeds) s = master();
  return seeds;
}

}  // namespace

Image denoise(const Image& z, double sigma, std::span<const FilterBank> banks,
              std::span<const DenoiseIteration> schedule, const DenoiseOptions& opts,
              std::vector<Image>* per_iteration, OrderingStats* stats) {
  if (schedule.empty()) throw std::invalid_argument("empty denoising schedule");
  if (banks.size() < schedule.size()) throw std::invalid_argument("missing filter bank for a denoising iteration");
  const auto seeds = draw_seeds(opts.seed, schedule.size());
  const PixelMask all = PixelMask::all_present(z);
  Image estimate;
  for (std::size_t i = 0; i < schedule.size(); ++i) {
    const DenoiseIteration& it = schedule[i];
    if (banks[i].length() != it.filter_length || banks[i].edge.size() != it.filter_length) {
      throw std::invalid_argument("filter bank length does not match iteration " + std::to_string(i + 1));
    }
    const auto t0 = std::chrono::steady_clock::now();
    OrderingStats local;
    const auto plans = build_denoise_plans(i == 0 ? z : estimate, sigma, it, seeds[i], opts.threads, &local);
    estimate = apply_plans(z, all, plans, it.patch_side, FilterOperator(banks[i]), opts.threads);
    if (stats) *stats += local;
    if (per_iteration) per_iteration->push_back(estimate);
    if (opts.on_iteration) {
      const std::chrono::duration<double, std::milli> dt = std::chrono::steady_clock::now() - t0;
      opts.on_iteration({i, &estimate, local, dt.count()});
    }
  }
  return estimate;
}

TrainingReport train_denoiser(std::span<const Image> clean, double sigma, std::span<const DenoiseIteration> schedule,
                              const DenoiseOptions& opts) {
  if (clean.empty()) throw std::invalid_argument("training set is empty");
  if (schedule.empty()) throw std::invalid_argument("empty denoising schedule");
  const std::size_t G = clean.size();
  const auto seeds = draw_seeds(opts.seed, G + schedule.size() * G);

  std::vector<Image> noisy;
  noisy.reserve(G);
  for (std::size_t g = 0; g < G; ++g) noisy.push_back(corrupt(clean[g], CorruptionSpec::gaussian(sigma, seeds[g])).image);

  TrainingReport report;
  std::vector<Image> guides = noisy;
  for (std::size_t i = 0; i < schedule.size(); ++i) {
    const DenoiseIteration& it = schedule[i];
    FilterTrainer trainer(it.filter_length);
    std::vector<QMatrix> qs;
    qs.reserve(G);
    for (std::size_t g = 0; g < G; ++g) {
      const auto plans = build_denoise_plans(guides[g], sigma, it, seeds[G + i * G + g], opts.threads);
      qs.push_back(build_q(noisy[g], plans, it.patch_side, it.filter_length, opts.threads));
      trainer.add(qs.back(), clean[g]);
    }
    auto result = trainer.solve(sigma, static_cast<int>(i + 1));
    const auto h = result.bank.stacked();
    for (std::size_t g = 0; g < G; ++g) guides[g] = qs[g].apply(h);
    report.banks.push_back(std::move(result.bank));
    report.ridge_applied.push_back(result.ridge_applied);
  }
  return report;
}

}  // namespace pord
