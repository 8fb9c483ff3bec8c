#pragma once

#include "surrogates/surrogate.hpp"

namespace mpstep::surrogates {

struct MlpConfig {
  std::size_t hidden = 128;
  std::size_t layers = 3;  // hidden layers
  Activation activation = Activation::Tanh;

  nlohmann::json to_json() const;
  static MlpConfig from_json(const nlohmann::json& j);
};

// Residual fully connected surrogate for vector states:
//   F(q) = q + std * net((q - mean) / std)
// with a zero-initialized output layer, so F is the identity at init.
class MlpSurrogate final : public Surrogate {
 public:
  MlpSurrogate(MlpConfig config, ad::Shape state_shape, systems::Normalization normalization,
               std::uint64_t seed);

  std::string architecture() const override { return "mlp"; }
  const ad::Shape& state_shape() const override { return state_shape_; }
  ad::Tensor forward(const ad::Tensor& q) const override;
  std::vector<NamedParameter> parameters() const override { return params_; }
  nlohmann::json config() const override { return config_.to_json(); }
  const systems::Normalization& normalization() const override { return normalization_; }

 private:
  MlpConfig config_;
  ad::Shape state_shape_;
  systems::Normalization normalization_;
  NormalizationTensors norm_;
  std::vector<NamedParameter> params_;  // w0, b0, w1, b1, ..., w_out, b_out
};

}  // namespace mpstep::surrogates
