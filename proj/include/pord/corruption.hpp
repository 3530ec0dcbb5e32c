#pragma once

#include <cstdint>
#include <random>
#include <utility>

#include "pord/image.hpp"

namespace pord {

/// The generator used for every stochastic choice in the library.
using Rng = std::mt19937_64;

struct CorruptionSpec {
  enum class Kind { additive_gaussian, random_erasure };

  Kind kind = Kind::additive_gaussian;
  double sigma = 0.0;     // additive_gaussian
  double fraction = 0.0;  // random_erasure, share of pixels removed
  std::uint64_t rng_seed = 0;

  static CorruptionSpec gaussian(double sigma, std::uint64_t seed) {
    return {Kind::additive_gaussian, sigma, 0.0, seed};
  }
  static CorruptionSpec erasure(double fraction, std::uint64_t seed) {
    return {Kind::random_erasure, 0.0, fraction, seed};
  }
};

struct Corrupted {
  Image image;
  PixelMask mask;
};

/// Applies z = My + v. Gaussian noise is not clipped; erased pixels are set to
/// zero and flagged missing in the mask. Exactly floor(fraction * N) pixels
/// are erased.
Corrupted corrupt(const Image& img, const CorruptionSpec& spec);

}  // namespace pord
