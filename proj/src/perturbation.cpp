#include "advkit/perturbation.hpp"

#include <algorithm>

#include "advkit/error.hpp"

namespace advkit {

Tensor sign(const Tensor& t) {
  Tensor out(t.shape());
  for (std::size_t i = 0; i < t.size(); ++i) {
    out[i] = t[i] > 0.0 ? 1.0 : (t[i] < 0.0 ? -1.0 : 0.0);
  }
  return out;
}

Tensor clip_to_ball(const Tensor& proposed, const Tensor& original, double epsilon, PixelDomain domain) {
  require_same_shape(proposed, original, "clip_to_ball");
  if (!(epsilon >= 0.0)) throw ConfigError("clip_to_ball: epsilon must be non-negative");
  Tensor out(proposed.shape());
  for (std::size_t i = 0; i < proposed.size(); ++i) {
    const double lo = std::max(domain.lo, original[i] - epsilon);
    const double hi = std::min(domain.hi, original[i] + epsilon);
    if (lo > hi) throw ContractError("clip_to_ball: original pixel lies outside the pixel domain");
    out[i] = std::clamp(proposed[i], lo, hi);
  }
  return out;
}

Tensor signed_step(const Tensor& x, const Tensor& grad, double direction, double step,
                   const Tensor& origin, double epsilon, PixelDomain domain) {
  require_same_shape(x, grad, "signed_step");
  Tensor proposed(x.shape());
  const double scale = direction * step;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double s = grad[i] > 0.0 ? 1.0 : (grad[i] < 0.0 ? -1.0 : 0.0);
    proposed[i] = x[i] + scale * s;
  }
  return clip_to_ball(proposed, origin, epsilon, domain);
}

}  // namespace advkit
