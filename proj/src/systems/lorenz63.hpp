#pragma once

#include <array>

#include "systems/system_spec.hpp"

namespace mpstep::systems {

using Lorenz63State = std::array<double, 3>;

struct Lorenz63Params {
  double sigma = 10.0;
  double rho = 28.0;
  double beta = 8.0 / 3.0;

  static Lorenz63Params from_spec(const SystemSpec& spec);
};

inline Lorenz63State lorenz63_rhs(const Lorenz63State& s, const Lorenz63Params& p) {
  return {p.sigma * (s[1] - s[0]), s[0] * (p.rho - s[2]) - s[1], s[0] * s[1] - p.beta * s[2]};
}

// Advances `s` by `steps` RK4 steps of size dt.
Lorenz63State lorenz63_advance(Lorenz63State s, const Lorenz63Params& p, double dt,
                               std::size_t steps);

}  // namespace mpstep::systems
