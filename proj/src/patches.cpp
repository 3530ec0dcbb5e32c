#include "pord/patches.hpp"

#include <algorithm>
#include <string>

namespace pord {
namespace {

void require_fits(std::size_t height, std::size_t width, std::size_t side) {
  if (side == 0) throw std::invalid_argument("patch side must be positive");
  if (side > height || side > width) {
    throw std::invalid_argument("patch side " + std::to_string(side) + " larger than image " +
                                std::to_string(height) + "x" + std::to_string(width));
  }
}

}  // namespace

PatchSet::PatchSet(const Image& img, std::size_t side, const PixelMask* mask) : side_(side) {
  require_fits(img.height(), img.width(), side);
  if (mask && !mask->matches(img)) throw DimensionError("mask size does not match image");
  rows_ = img.height() - side + 1;
  cols_ = img.width() - side + 1;
  image_width_ = img.width();
  const std::size_t n = dim();
  data_.resize(count() * n);
  if (mask) visible_.resize(count() * n);
  for (std::size_t p = 0; p < count(); ++p) {
    const PatchCoord c = coord(p);
    double* dst = data_.data() + p * n;
    std::uint8_t* vis = mask ? visible_.data() + p * n : nullptr;
    for (std::size_t dc = 0; dc < side; ++dc) {
      for (std::size_t dr = 0; dr < side; ++dr) {
        const std::size_t k = dc * side + dr;
        dst[k] = img(c.row + dr, c.col + dc);
        if (vis) vis[k] = (*mask)(c.row + dr, c.col + dc) ? 1 : 0;
      }
    }
  }
}

std::vector<std::size_t> PatchSet::visible_set(std::size_t p) const {
  std::vector<std::size_t> s;
  if (visible_.empty()) {
    s.resize(dim());
    for (std::size_t k = 0; k < dim(); ++k) s[k] = k;
    return s;
  }
  auto v = visibility(p);
  for (std::size_t k = 0; k < v.size(); ++k) {
    if (v[k]) s.push_back(k);
  }
  return s;
}

Image extract_subimage(const Image& img, std::size_t j, std::size_t side) {
  require_fits(img.height(), img.width(), side);
  if (j >= side * side) throw std::out_of_range("subimage offset index " + std::to_string(j) + " out of range");
  const PatchOffset off = offset_of(j, side);
  Image sub(img.height() - side + 1, img.width() - side + 1);
  for (std::size_t r = 0; r < sub.height(); ++r) {
    for (std::size_t c = 0; c < sub.width(); ++c) sub(r, c) = img(r + off.dr, c + off.dc);
  }
  return sub;
}

void accumulate_subimage(Image& canvas, Image& weights, const Image& sub, std::size_t j, std::size_t side) {
  require_same_size(canvas, weights, "accumulate_subimage");
  require_fits(canvas.height(), canvas.width(), side);
  if (sub.height() != canvas.height() - side + 1 || sub.width() != canvas.width() - side + 1) {
    throw DimensionError("subimage size does not match canvas and patch side");
  }
  if (j >= side * side) throw std::out_of_range("subimage offset index " + std::to_string(j) + " out of range");
  const PatchOffset off = offset_of(j, side);
  for (std::size_t r = 0; r < sub.height(); ++r) {
    for (std::size_t c = 0; c < sub.width(); ++c) {
      canvas(r + off.dr, c + off.dc) += sub(r, c);
      weights(r + off.dr, c + off.dc) += 1.0;
    }
  }
}

Image coverage_weights(std::size_t height, std::size_t width, std::size_t side) {
  require_fits(height, width, side);
  Image w(height, width);
  const std::size_t rows = height - side + 1;
  const std::size_t cols = width - side + 1;
  for (std::size_t r = 0; r < height; ++r) {
    // offsets dr with 0 <= r - dr < rows
    const std::size_t rlo = r + 1 > rows ? r + 1 - rows : 0;
    const std::size_t rcount = std::min(r, side - 1) + 1 - rlo;
    for (std::size_t c = 0; c < width; ++c) {
      const std::size_t clo = c + 1 > cols ? c + 1 - cols : 0;
      const std::size_t ccount = std::min(c, side - 1) + 1 - clo;
      w(r, c) = static_cast<double>(rcount * ccount);
    }
  }
  return w;
}

}  // namespace pord
