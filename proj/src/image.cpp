#include "pord/image.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace pord {

Image::Image(std::size_t height, std::size_t width, double fill)
    : height_(height), width_(width), data_(height * width, fill) {}

Image::Image(std::size_t height, std::size_t width, std::vector<double> data)
    : height_(height), width_(width), data_(std::move(data)) {
  if (data_.size() != height * width) {
    throw DimensionError("image data length " + std::to_string(data_.size()) + " != " +
                         std::to_string(height) + "x" + std::to_string(width));
  }
}

PixelMask::PixelMask(std::size_t height, std::size_t width, bool present)
    : height_(height), width_(width), bits_(height * width, present ? 1 : 0) {}

std::size_t PixelMask::count_present() const {
  return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), std::uint8_t{1}));
}

void require_same_size(const Image& a, const Image& b, const char* what) {
  if (a.height() != b.height() || a.width() != b.width()) {
    throw DimensionError(std::string(what) + ": size mismatch " + std::to_string(a.height()) + "x" +
                         std::to_string(a.width()) + " vs " + std::to_string(b.height()) + "x" +
                         std::to_string(b.width()));
  }
}

double mse(const Image& reference, const Image& test) {
  require_same_size(reference, test, "mse");
  if (reference.empty()) return 0.0;
  auto a = reference.pixels();
  auto b = test.pixels();
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    sum += d * d;
  }
  return sum / static_cast<double>(a.size());
}

double psnr(const Image& reference, const Image& test) {
  const double e = mse(reference, test);
  if (e == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(255.0 * 255.0 / e);
}

Image clipped(const Image& img) {
  Image out = img;
  for (double& v : out.pixels()) v = std::clamp(v, 0.0, 255.0);
  return out;
}

}  // namespace pord
