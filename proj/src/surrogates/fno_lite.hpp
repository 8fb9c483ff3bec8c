#pragma once

#include "surrogates/surrogate.hpp"

namespace mpstep::surrogates {

struct SpectralLayerConfig {
  std::size_t modes = 12;  // kept per dimension, <= N/2
  std::size_t width = 16;
  std::size_t layers = 4;
  Activation activation = Activation::Gelu;

  nlohmann::json to_json() const;
  static SpectralLayerConfig from_json(const nlohmann::json& j);
};

// Residual Fourier-layer surrogate for gridded fields [C x N x N]:
//
//   h = lift(q_norm)
//   h = act(real(ifft2(mix(fft2(h)))) + bypass(h))    (repeated `layers` times)
//   F(q) = q + std * project(h)
//
// lift, bypass and project are pointwise channel maps; mix multiplies each
// retained Fourier mode by a learned complex width x width matrix. The
// projection is zero-initialized.
class FnoLiteSurrogate final : public Surrogate {
 public:
  FnoLiteSurrogate(SpectralLayerConfig config, ad::Shape state_shape,
                   systems::Normalization normalization, std::uint64_t seed);

  std::string architecture() const override { return "fno_lite"; }
  const ad::Shape& state_shape() const override { return state_shape_; }
  ad::Tensor forward(const ad::Tensor& q) const override;
  std::vector<NamedParameter> parameters() const override { return params_; }
  nlohmann::json config() const override { return config_.to_json(); }
  const systems::Normalization& normalization() const override { return normalization_; }

 private:
  const ad::Tensor& param(std::size_t i) const { return params_[i].tensor; }

  SpectralLayerConfig config_;
  ad::Shape state_shape_;
  systems::Normalization normalization_;
  NormalizationTensors norm_;
  std::vector<NamedParameter> params_;
};

}  // namespace mpstep::surrogates
