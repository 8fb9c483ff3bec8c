#pragma once

// Central-difference gradient oracle. Evaluates only forward values of the
// objective, so it is independent of the reverse-mode path it checks.

#include <algorithm>
#include <cmath>
#include <functional>
#include <span>
#include <vector>

#include "autodiff/tensor.hpp"

namespace testsupport {

inline std::vector<double> central_differences(const std::function<double()>& objective,
                                               mpstep::ad::Tensor& leaf, double h = 1e-5) {
  auto values = leaf.mutable_values();
  std::vector<double> grad(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double saved = values[i];
    values[i] = saved + h;
    const double up = objective();
    values[i] = saved - h;
    const double down = objective();
    values[i] = saved;
    grad[i] = (up - down) / (2.0 * h);
  }
  return grad;
}

// ||a - b|| / max(||b||, floor), Euclidean norms over the whole vector.
inline double relative_error(std::span<const double> a, std::span<const double> b,
                             double floor = 1e-12) {
  double diff = 0.0, ref = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff += (a[i] - b[i]) * (a[i] - b[i]);
    ref += b[i] * b[i];
  }
  return std::sqrt(diff) / std::max(std::sqrt(ref), floor);
}

// Analytic gradient of `objective_tensor` (rebuilt on each call) for every
// leaf, checked against central differences. Returns the worst relative error.
inline double max_gradient_error(const std::function<mpstep::ad::Tensor()>& objective_tensor,
                                 std::vector<mpstep::ad::Tensor> leaves, double h = 1e-5) {
  for (auto& l : leaves) l.zero_grad();
  mpstep::ad::backward(objective_tensor());
  double worst = 0.0;
  for (auto& l : leaves) {
    const auto analytic = l.grad();
    const auto numeric = central_differences([&] { return objective_tensor().item(); }, l, h);
    worst = std::max(worst, relative_error(analytic, numeric));
  }
  return worst;
}

}  // namespace testsupport
