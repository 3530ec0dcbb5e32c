#include "pord/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

#include "pord/corruption.hpp"

namespace pord {

namespace {

Image gaussian_blur(const Image& img, double sigma) {
  const auto radius = static_cast<long long>(std::ceil(3.0 * sigma));
  std::vector<double> k(static_cast<std::size_t>(2 * radius + 1));
  double total = 0.0;
  for (long long t = -radius; t <= radius; ++t) {
    const double v = std::exp(-0.5 * double(t * t) / (sigma * sigma));
    k[static_cast<std::size_t>(t + radius)] = v;
    total += v;
  }
  for (double& v : k) v /= total;
  const auto H = static_cast<long long>(img.height()), W = static_cast<long long>(img.width());
  auto clampi = [](long long i, long long n) { return std::clamp<long long>(i, 0, n - 1); };
  Image tmp(img.height(), img.width()), out(img.height(), img.width());
  for (long long r = 0; r < H; ++r)
    for (long long c = 0; c < W; ++c) {
      double acc = 0.0;
      for (long long t = -radius; t <= radius; ++t) acc += k[static_cast<std::size_t>(t + radius)] * img(r, clampi(c + t, W));
      tmp(r, c) = acc;
    }
  for (long long r = 0; r < H; ++r)
    for (long long c = 0; c < W; ++c) {
      double acc = 0.0;
      for (long long t = -radius; t <= radius; ++t) acc += k[static_cast<std::size_t>(t + radius)] * tmp(clampi(r + t, H), c);
      out(r, c) = acc;
    }
  return out;
}

}  // namespace

Image dead_leaves(std::size_t height, std::size_t width, std::uint64_t seed, const DeadLeavesParams& params) {
  if (height == 0 || width == 0) throw std::invalid_argument("image must be non-empty");
  if (!(params.r_min > 0.0) || params.r_max < params.r_min) throw std::invalid_argument("bad disk radius range");
  Rng rng(seed);
  std::uniform_real_distribution<double> u01(0.0, 1.0);

  Image img(height, width);
  std::vector<std::uint8_t> covered(height * width, 0);
  const double a = u01(rng) * 2.0 * M_PI;
  const double gr = std::cos(a) * params.shading / double(height), gc = std::sin(a) * params.shading / double(width);
  const double base = 90.0 + 80.0 * u01(rng);
  for (std::size_t r = 0; r < height; ++r)
    for (std::size_t c = 0; c < width; ++c) img(r, c) = base + gr * double(r) + gc * double(c);

  const std::size_t disks = params.disks ? params.disks : height * width / 40;
  // radius density ~ 1/r^3 between r_min and r_max (inverse-CDF sampling)
  const double inv_min2 = 1.0 / (params.r_min * params.r_min), inv_max2 = 1.0 / (params.r_max * params.r_max);
  // Disks are painted front to back: a pixel keeps the first disk that covers it.
  for (std::size_t d = 0; d < disks; ++d) {
    const double radius = 1.0 / std::sqrt(inv_min2 - u01(rng) * (inv_min2 - inv_max2));
    const double cr = u01(rng) * double(height), cc = u01(rng) * double(width);
    const double level = 20.0 + 215.0 * u01(rng);
    const double tilt_r = (u01(rng) - 0.5) * 1.5, tilt_c = (u01(rng) - 0.5) * 1.5;
    const auto r0 = static_cast<long long>(std::max(0.0, std::floor(cr - radius)));
    const auto r1 = static_cast<long long>(std::min(double(height) - 1.0, std::ceil(cr + radius)));
    const auto c0 = static_cast<long long>(std::max(0.0, std::floor(cc - radius)));
    const auto c1 = static_cast<long long>(std::min(double(width) - 1.0, std::ceil(cc + radius)));
    for (long long r = r0; r <= r1; ++r)
      for (long long c = c0; c <= c1; ++c) {
        const double dr = double(r) - cr, dc = double(c) - cc;
        if (dr * dr + dc * dc > radius * radius) continue;
        const std::size_t i = static_cast<std::size_t>(r) * width + static_cast<std::size_t>(c);
        if (covered[i]) continue;
        covered[i] = 1;
        img.pixels()[i] = level + tilt_r * dr + tilt_c * dc;
      }
  }
  if (params.blur > 0.0) img = gaussian_blur(img, params.blur);
  img = clipped(img);
  for (double& v : img.pixels()) v = std::round(v);
  return img;
}

Image horizontal_ramp(std::size_t height, std::size_t width, double slope, double offset) {
  Image img(height, width);
  for (std::size_t r = 0; r < height; ++r)
    for (std::size_t c = 0; c < width; ++c) img(r, c) = offset + slope * double(c);
  return img;
}

}  // namespace pord
