#include "advkit/grad_check.hpp"

#include <algorithm>
#include <cmath>

namespace advkit {

Tensor numerical_gradient(const ScalarFn& f, const Tensor& x, double h) {
  Tensor probe = x;
  Tensor grad(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double orig = probe[i];
    probe[i] = orig + h;
    const double up = f(probe);
    probe[i] = orig - h;
    const double down = f(probe);
    probe[i] = orig;
    grad[i] = (up - down) / (2.0 * h);
  }
  return grad;
}

double grad_check(const ScalarFn& f, const Tensor& x, const Tensor& analytic_grad, double h) {
  require_same_shape(x, analytic_grad, "grad_check");
  const Tensor numeric = numerical_gradient(f, x, h);
  double worst = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double a = analytic_grad[i];
    const double n = numeric[i];
    const double denom = std::max({1.0, std::abs(a), std::abs(n)});
    worst = std::max(worst, std::abs(a - n) / denom);
  }
  return worst;
}

}  // namespace advkit
