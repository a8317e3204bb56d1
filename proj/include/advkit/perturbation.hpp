#pragma once

#include "advkit/tensor.hpp"

namespace advkit {

struct PixelDomain {
  double lo = 0.0;
  double hi = 1.0;
};

/// Elementwise sign in {-1, 0, +1}; sign(0) = 0.
Tensor sign(const Tensor& t);

/// Projects `proposed` onto the intersection of the l-infinity ball of
/// radius `epsilon` around `original` and the pixel domain:
/// each pixel is clamped to [max(lo, x - eps), min(hi, x + eps)].
Tensor clip_to_ball(const Tensor& proposed, const Tensor& original, double epsilon,
                    PixelDomain domain = {});

/// clip_to_ball(x + direction * step * sign(grad), origin, epsilon).
Tensor signed_step(const Tensor& x, const Tensor& grad, double direction, double step,
                   const Tensor& origin, double epsilon, PixelDomain domain = {});

}  // namespace advkit
