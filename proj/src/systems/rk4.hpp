#pragma once

#include <cmath>
#include <cstddef>
#include <string>

#include "common/error.hpp"

namespace mpstep::systems {

// Classical fourth-order Runge-Kutta step for autonomous y' = f(y). `State`
// needs element access, size() and value semantics (std::array, std::vector).
template <typename State, typename Rhs>
State rk4_step(const Rhs& rhs, const State& y, double dt, std::size_t step_index = 0) {
  auto axpy = [](const State& base, const State& k, double h) {
    State out = base;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = base[i] + h * k[i];
    return out;
  };
  const State k1 = rhs(y);
  const State k2 = rhs(axpy(y, k1, 0.5 * dt));
  const State k3 = rhs(axpy(y, k2, 0.5 * dt));
  const State k4 = rhs(axpy(y, k3, dt));
  State out = y;
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = y[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    if (!std::isfinite(out[i])) {
      throw NumericalError("non-finite state after RK4 step " + std::to_string(step_index));
    }
  }
  return out;
}

}  // namespace mpstep::systems
