#pragma once

#include "surrogates/surrogate.hpp"
#include "systems/system_spec.hpp"

namespace mpstep::surrogates {

// The reference integrator exposed through the surrogate interface: one call
// advances each state by subsample_factor integrator steps. Has no parameters
// and never records a graph.
class ReferenceSurrogate final : public Surrogate {
 public:
  explicit ReferenceSurrogate(systems::SystemSpec spec,
                              systems::Normalization normalization = {});

  std::string architecture() const override { return "reference"; }
  const ad::Shape& state_shape() const override { return state_shape_; }
  ad::Tensor forward(const ad::Tensor& q) const override;
  nlohmann::json config() const override { return spec_.to_json(); }
  const systems::Normalization& normalization() const override { return normalization_; }

 private:
  systems::SystemSpec spec_;
  ad::Shape state_shape_;
  systems::Normalization normalization_;
};

}  // namespace mpstep::surrogates
