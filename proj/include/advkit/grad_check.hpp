#pragma once

#include <functional>

#include "advkit/tensor.hpp"

namespace advkit {

using ScalarFn = std::function<double(const Tensor&)>;

/// Central-difference gradient of `f` at `x`, one coordinate at a time.
Tensor numerical_gradient(const ScalarFn& f, const Tensor& x, double h = 1e-5);

/// Largest per-coordinate relative error between `analytic_grad` and the
/// central-difference estimate. The denominator is max(1, |a|, |n|), so the
/// measure degrades to absolute error for small gradients.
double grad_check(const ScalarFn& f, const Tensor& x, const Tensor& analytic_grad,
                  double h = 1e-5);

}  // namespace advkit
