#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "pord/image.hpp"

namespace pord {

/// Position of a patch's top-left pixel.
struct PatchCoord {
  std::size_t row = 0;
  std::size_t col = 0;
  bool operator==(const PatchCoord&) const = default;
};

/// In-patch pixel offset addressed by a column-stacked element index.
struct PatchOffset {
  std::size_t dr = 0;
  std::size_t dc = 0;
};

/// Element j of a column-stacked side x side patch sits at row j % side,
/// column j / side.
inline PatchOffset offset_of(std::size_t j, std::size_t side) { return {j % side, j / side}; }

/// All overlapping side x side patches of an image.
///
/// Patches are enumerated column by column from the top-left one, so patch
/// p sits at row p % grid_rows(), column p / grid_rows(). Each patch vector
/// is column-stacked (down each column, left to right). Element j of every
/// patch, read in patch order, is therefore the column-stacked subimage j.
class PatchSet {
 public:
  PatchSet(const Image& img, std::size_t side, const PixelMask* mask = nullptr);

  std::size_t side() const { return side_; }
  std::size_t dim() const { return side_ * side_; }
  std::size_t count() const { return rows_ * cols_; }
  std::size_t grid_rows() const { return rows_; }
  std::size_t grid_cols() const { return cols_; }
  std::size_t image_width() const { return image_width_; }

  PatchCoord coord(std::size_t p) const { return {p % rows_, p / rows_}; }
  std::size_t index_of(PatchCoord c) const { return c.col * rows_ + c.row; }

  std::span<const double> patch(std::size_t p) const { return {data_.data() + p * dim(), dim()}; }

  bool has_visibility() const { return !visible_.empty(); }
  /// Per-element presence flags of patch p (1 = observed). Empty span when no
  /// mask was supplied.
  std::span<const std::uint8_t> visibility(std::size_t p) const {
    if (visible_.empty()) return {};
    return {visible_.data() + p * dim(), dim()};
  }
  /// The index set S_p of observed in-patch offsets.
  std::vector<std::size_t> visible_set(std::size_t p) const;

 private:
  std::size_t side_;
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::size_t image_width_ = 0;
  std::vector<double> data_;
  std::vector<std::uint8_t> visible_;
};

inline PatchSet extract_patches(const Image& img, std::size_t side, const PixelMask* mask = nullptr) {
  return PatchSet(img, side, mask);
}

/// Subimage of size (H-side+1) x (W-side+1) holding pixel offset j of every
/// patch (0-based j < side*side).
Image extract_subimage(const Image& img, std::size_t j, std::size_t side);

/// Adds `sub` into `canvas` at offset j and bumps `weights` at the same
/// pixels. Both accumulators must have the full image size.
void accumulate_subimage(Image& canvas, Image& weights, const Image& sub, std::size_t j, std::size_t side);

/// Number of offsets covering each pixel once all side*side subimages are
/// accumulated (the diagonal averaging weights).
Image coverage_weights(std::size_t height, std::size_t width, std::size_t side);

}  // namespace pord
