#pragma once

#include <cstddef>
#include <cstdint>

#include "pord/image.hpp"

namespace pord {

/// Dead-leaves texture: occluding disks with power-law radii and random gray
/// levels over a smooth shaded background, followed by a light blur. Has
/// the edge/flat mix and heavy-tailed gradients of natural photographs.
/// Values are whole numbers in [0, 255], like a decoded 8-bit file.
struct DeadLeavesParams {
  std::size_t disks = 0;  // 0 picks a count proportional to the area
  double r_min = 2.0;
  double r_max = 60.0;
  double shading = 40.0;  // amplitude of the background gradient
  double blur = 0.8;      // Gaussian blur std in pixels, 0 to disable
};

Image dead_leaves(std::size_t height, std::size_t width, std::uint64_t seed, const DeadLeavesParams& params = {});

/// v(r, c) = offset + slope * c.
Image horizontal_ramp(std::size_t height, std::size_t width, double slope = 1.0, double offset = 0.0);

}  // namespace pord
