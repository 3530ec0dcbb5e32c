#include <algorithm>
#include <cmath>

#include "pord/inpaint.hpp"

namespace pord {
namespace {

int sign(double v) { return (v > 0.0) - (v < 0.0); }

// End slope for PCHIP: non-centered three-point estimate, kept shape
// preserving.
double pchip_end_slope(double h0, double h1, double d0, double d1) {
  double s = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
  if (sign(s) != sign(d0)) {
    s = 0.0;
  } else if (sign(d0) != sign(d1) && std::abs(s) > 3.0 * std::abs(d0)) {
    s = 3.0 * d0;
  }
  return s;
}

std::vector<double> pchip_slopes(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t m = x.size();
  std::vector<double> h(m - 1), delta(m - 1), d(m);
  for (std::size_t k = 0; k + 1 < m; ++k) {
    h[k] = x[k + 1] - x[k];
    delta[k] = (y[k + 1] - y[k]) / h[k];
  }
  if (m == 2) {
    d[0] = d[1] = delta[0];
    return d;
  }
  for (std::size_t k = 1; k + 1 < m; ++k) {
    if (delta[k - 1] * delta[k] <= 0.0) {
      d[k] = 0.0;
    } else {
      const double w1 = 2.0 * h[k] + h[k - 1];
      const double w2 = h[k] + 2.0 * h[k - 1];
      d[k] = (w1 + w2) / (w1 / delta[k - 1] + w2 / delta[k]);
    }
  }
  d[0] = pchip_end_slope(h[0], h[1], delta[0], delta[1]);
  d[m - 1] = pchip_end_slope(h[m - 2], h[m - 3], delta[m - 2], delta[m - 3]);
  return d;
}

// First derivatives of the natural cubic spline through (x, y).
std::vector<double> natural_spline_slopes(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t m = x.size();
  std::vector<double> h(m - 1), delta(m - 1);
  for (std::size_t k = 0; k + 1 < m; ++k) {
    h[k] = x[k + 1] - x[k];
    delta[k] = (y[k + 1] - y[k]) / h[k];
  }
  // Second derivatives M with M[0] = M[m-1] = 0, tridiagonal (Thomas).
  std::vector<double> M(m, 0.0);
  if (m > 2) {
    const std::size_t inner = m - 2;
    std::vector<double> diag(inner), upper(inner), rhs(inner);
    for (std::size_t i = 0; i < inner; ++i) {
      diag[i] = 2.0 * (h[i] + h[i + 1]);
      upper[i] = h[i + 1];
      rhs[i] = 6.0 * (delta[i + 1] - delta[i]);
    }
    for (std::size_t i = 1; i < inner; ++i) {
      const double f = h[i] / diag[i - 1];
      diag[i] -= f * upper[i - 1];
      rhs[i] -= f * rhs[i - 1];
    }
    M[inner] = rhs[inner - 1] / diag[inner - 1];
    for (std::size_t i = inner - 1; i-- > 0;) M[i + 1] = (rhs[i] - upper[i] * M[i + 2]) / diag[i];
  }
  std::vector<double> d(m);
  for (std::size_t k = 0; k + 1 < m; ++k) d[k] = delta[k] - h[k] * (2.0 * M[k] + M[k + 1]) / 6.0;
  d[m - 1] = delta[m - 2] + h[m - 2] * (M[m - 2] + 2.0 * M[m - 1]) / 6.0;
  return d;
}

double hermite(double x0, double x1, double y0, double y1, double d0, double d1, double t) {
  const double h = x1 - x0;
  const double s = (t - x0) / h;
  const double s2 = s * s;
  const double s3 = s2 * s;
  return (2 * s3 - 3 * s2 + 1) * y0 + (s3 - 2 * s2 + s) * h * d0 + (-2 * s3 + 3 * s2) * y1 + (s3 - s2) * h * d1;
}

}  // namespace

std::vector<double> cubic_fill(std::span<const double> values, std::span<const std::uint8_t> valid, CubicKind kind) {
  if (values.size() != valid.size()) throw DimensionError("cubic_fill: values and validity differ in length");
  std::vector<double> out(values.begin(), values.end());
  std::vector<double> x, y;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (valid[i]) {
      x.push_back(static_cast<double>(i));
      y.push_back(values[i]);
    }
  }
  if (x.size() == values.size()) return out;
  if (x.size() < 2) throw InsufficientData("cubic_fill needs at least two known samples");

  const auto d = kind == CubicKind::pchip ? pchip_slopes(x, y) : natural_spline_slopes(x, y);
  const auto first = static_cast<std::size_t>(x.front());
  const auto last = static_cast<std::size_t>(x.back());
  for (std::size_t i = 0; i < first; ++i) out[i] = y.front();
  for (std::size_t i = last + 1; i < out.size(); ++i) out[i] = y.back();
  std::size_t seg = 0;
  for (std::size_t i = first + 1; i < last; ++i) {
    if (valid[i]) continue;
    const double t = static_cast<double>(i);
    while (x[seg + 1] < t) ++seg;
    out[i] = hermite(x[seg], x[seg + 1], y[seg], y[seg + 1], d[seg], d[seg + 1], t);
  }
  return out;
}

void CubicFillOperator::apply(const SignalContext&, std::span<const double> values,
                              std::span<const std::uint8_t> valid, std::span<double> out) const {
  const auto filled = cubic_fill(values, valid, kind_);
  std::copy(filled.begin(), filled.end(), out.begin());
}

}  // namespace pord
