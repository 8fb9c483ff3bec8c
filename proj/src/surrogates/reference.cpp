#include "surrogates/reference.hpp"

#include "systems/kolmogorov2d.hpp"
#include "systems/lorenz63.hpp"

namespace mpstep::surrogates {

ReferenceSurrogate::ReferenceSurrogate(systems::SystemSpec spec, systems::Normalization normalization)
    : spec_(std::move(spec)), state_shape_(spec_.state_shape()), normalization_(std::move(normalization)) {
  if (normalization_.mean.empty()) {
    normalization_.mean.assign(state_shape_[0], 0.0);
    normalization_.std.assign(state_shape_[0], 1.0);
  }
}

ad::Tensor ReferenceSurrogate::forward(const ad::Tensor& q) const {
  check_input(q);
  const std::size_t batch = q.shape()[0];
  const std::size_t size = ad::numel(state_shape_);
  std::vector<double> out(q.values().begin(), q.values().end());
  if (spec_.kind == systems::SystemKind::Lorenz63) {
    const auto p = systems::Lorenz63Params::from_spec(spec_);
    for (std::size_t b = 0; b < batch; ++b) {
      systems::Lorenz63State s{out[3 * b], out[3 * b + 1], out[3 * b + 2]};
      s = systems::lorenz63_advance(s, p, spec_.integrator_dt, spec_.subsample_factor);
      std::copy(s.begin(), s.end(), out.begin() + static_cast<std::ptrdiff_t>(3 * b));
    }
  } else {
    const systems::KolmogorovSolver solver(spec_);
    for (std::size_t b = 0; b < batch; ++b) {
      std::span<double> field(out.data() + b * size, size);
      auto w = solver.to_spectral(field);
      for (std::size_t i = 0; i < spec_.subsample_factor; ++i) w = solver.step(w, spec_.integrator_dt, i);
      const auto phys = solver.to_physical(w);
      std::copy(phys.begin(), phys.end(), field.begin());
    }
  }
  return ad::Tensor::from(q.shape(), std::move(out));
}

}  // namespace mpstep::surrogates
