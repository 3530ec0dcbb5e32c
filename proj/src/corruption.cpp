#include "pord/corruption.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace pord {

Corrupted corrupt(const Image& img, const CorruptionSpec& spec) {
  Rng rng(spec.rng_seed);
  Corrupted out{img, PixelMask::all_present(img)};
  switch (spec.kind) {
    case CorruptionSpec::Kind::additive_gaussian: {
      if (!(spec.sigma >= 0.0)) throw std::invalid_argument("noise sigma must be >= 0");
      if (spec.sigma == 0.0) break;
      std::normal_distribution<double> noise(0.0, spec.sigma);
      for (double& v : out.image.pixels()) v += noise(rng);
      break;
    }
    case CorruptionSpec::Kind::random_erasure: {
      if (!(spec.fraction >= 0.0 && spec.fraction <= 1.0)) {
        throw std::invalid_argument("erasure fraction must lie in [0, 1]");
      }
      const std::size_t total = img.size();
      const auto erase = static_cast<std::size_t>(std::floor(spec.fraction * static_cast<double>(total)));
      std::vector<std::size_t> order(total);
      std::iota(order.begin(), order.end(), std::size_t{0});
      // partial Fisher-Yates: the first `erase` slots become a uniform subset
      for (std::size_t i = 0; i < erase; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, total - 1);
        std::swap(order[i], order[pick(rng)]);
      }
      auto px = out.image.pixels();
      auto bits = out.mask.bits();
      for (std::size_t i = 0; i < erase; ++i) {
        px[order[i]] = 0.0;
        bits[order[i]] = 0;
      }
      break;
    }
  }
  return out;
}

}  // namespace pord
