#pragma once

#include <functional>
#include <vector>

#include "ftacl/tensor.hpp"

namespace ftacl {

/// Central-difference gradient verification. `loss_fn` must rebuild the
/// forward graph from the current parameter values and return a scalar loss.
/// Returns the maximum relative error between analytic and numeric gradients,
/// with denominator max(|analytic|, |numeric|, 1e-8).
double check_gradients(const std::function<TensorPtr()>& loss_fn,
                       const std::vector<TensorPtr>& params, double h = 1e-5);

}  // namespace ftacl
