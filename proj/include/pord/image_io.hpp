#pragma once

#include <filesystem>
#include <stdexcept>

#include "pord/image.hpp"

namespace pord {

/// File could not be opened, or ended early.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// File was readable but is not in a format we decode.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Binary PGM (P5), 8-bit and 16-bit sources scaled to [0, 255]. PNG files
// are decoded to 8-bit gray when PNG support is built in.
Image load_image(const std::filesystem::path& path);
// Writes 8-bit P5; values are clipped to [0, 255] and rounded.
void save_pgm(const std::filesystem::path& path, const Image& img);
void save_png(const std::filesystem::path& path, const Image& img);
bool png_supported();

// Mask files are P5 PGMs: 0 = missing, anything else = present.
PixelMask load_mask(const std::filesystem::path& path);
void save_mask(const std::filesystem::path& path, const PixelMask& mask);

// Raw float64 grid: "PORD", u32 height, u32 width, u32 reserved (0), then
// height*width little-endian doubles in row-major order.
void save_raw(const std::filesystem::path& path, const Image& img);
Image load_raw(const std::filesystem::path& path);

}  // namespace pord
