#include "systems/lorenz63.hpp"

#include "systems/rk4.hpp"

namespace mpstep::systems {

Lorenz63Params Lorenz63Params::from_spec(const SystemSpec& spec) {
  return {spec.param("sigma"), spec.param("rho"), spec.param("beta")};
}

Lorenz63State lorenz63_advance(Lorenz63State s, const Lorenz63Params& p, double dt,
                               std::size_t steps) {
  auto rhs = [&p](const Lorenz63State& y) { return lorenz63_rhs(y, p); };
  for (std::size_t i = 0; i < steps; ++i) s = rk4_step(rhs, s, dt, i);
  return s;
}

}  // namespace mpstep::systems
