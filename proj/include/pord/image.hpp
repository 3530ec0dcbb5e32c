#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace pord {

/// Thrown when two rasters that must agree in size do not.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Grayscale raster, row-major, real-valued. Working range is [0, 255] but
/// values outside it are kept (noise is not clipped until export).
class Image {
 public:
  Image() = default;
  Image(std::size_t height, std::size_t width, double fill = 0.0);
  Image(std::size_t height, std::size_t width, std::vector<double> data);

  std::size_t height() const { return height_; }
  std::size_t width() const { return width_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * width_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * width_ + c]; }

  std::span<double> pixels() { return data_; }
  std::span<const double> pixels() const { return data_; }

  bool operator==(const Image&) const = default;

 private:
  std::size_t height_ = 0;
  std::size_t width_ = 0;
  std::vector<double> data_;
};

/// Per-pixel presence flags; true means the pixel was observed.
class PixelMask {
 public:
  PixelMask() = default;
  PixelMask(std::size_t height, std::size_t width, bool present = true);

  static PixelMask all_present(const Image& like) { return {like.height(), like.width(), true}; }

  std::size_t height() const { return height_; }
  std::size_t width() const { return width_; }
  std::size_t size() const { return bits_.size(); }

  bool operator()(std::size_t r, std::size_t c) const { return bits_[r * width_ + c] != 0; }
  void set(std::size_t r, std::size_t c, bool present) { bits_[r * width_ + c] = present ? 1 : 0; }

  std::span<const std::uint8_t> bits() const { return bits_; }
  std::span<std::uint8_t> bits() { return bits_; }

  std::size_t count_present() const;
  bool all_true() const { return count_present() == size(); }
  bool matches(const Image& img) const { return img.height() == height_ && img.width() == width_; }

  bool operator==(const PixelMask&) const = default;

 private:
  std::size_t height_ = 0;
  std::size_t width_ = 0;
  std::vector<std::uint8_t> bits_;
};

void require_same_size(const Image& a, const Image& b, const char* what);

/// Mean squared error over all pixels.
double mse(const Image& reference, const Image& test);

/// Peak signal-to-noise ratio with peak 255. Returns +infinity for identical
/// images.
double psnr(const Image& reference, const Image& test);

/// Copy with every pixel clamped to [0, 255].
Image clipped(const Image& img);

}  // namespace pord
