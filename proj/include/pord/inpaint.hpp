#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "pord/image.hpp"
#include "pord/ordering.hpp"
#include "pord/pipeline.hpp"

namespace pord {

/// Fewer than two known samples: nothing to interpolate from.
class InsufficientData : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class CubicKind {
  pchip,           // monotone piecewise cubic Hermite (Fritsch-Carlson)
  natural_spline,  // C2 spline with zero end curvature
};

/// Fills missing samples (valid == 0) by cubic interpolation over the indices
/// of the known ones. Known samples are returned unchanged; samples before the
/// first or after the last known one take that known value.
std::vector<double> cubic_fill(std::span<const double> values, std::span<const std::uint8_t> valid,
                               CubicKind kind = CubicKind::pchip);

/// H for inpainting.
class CubicFillOperator final : public Operator1D {
 public:
  explicit CubicFillOperator(CubicKind kind = CubicKind::pchip) : kind_(kind) {}
  void apply(const SignalContext&, std::span<const double> values, std::span<const std::uint8_t> valid,
             std::span<double> out) const override;

 private:
  CubicKind kind_;
};

/// Settings of one inpainting iteration.
struct InpaintIteration {
  std::size_t K = 10;
  std::size_t patch_side = 16;
  std::size_t window = 9;
  double epsilon = 1e2;
};

/// Stock three-iteration schedule.
std::vector<InpaintIteration> default_inpaint_schedule();

struct InpaintOptions {
  std::uint64_t seed = 0;
  std::size_t threads = 1;
  CubicKind cubic = CubicKind::pchip;
  /// Copy observed pixels back into every iteration's output.
  bool reset_known = true;
  IterationCallback on_iteration;
};

/// Iteration 1 orders patches with the masked distance; later iterations order
/// the full patches of the previous output. Every iteration interpolates the
/// observed samples of z.
Image inpaint(const Image& z, const PixelMask& mask, std::span<const InpaintIteration> schedule,
              const InpaintOptions& opts = {}, std::vector<Image>* per_iteration = nullptr,
              OrderingStats* stats = nullptr);

}  // namespace pord
