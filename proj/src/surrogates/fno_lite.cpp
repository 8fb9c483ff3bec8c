#include "surrogates/fno_lite.hpp"

#include <cmath>

#include "autodiff/complex.hpp"
#include "autodiff/fft.hpp"
#include "autodiff/ops.hpp"
#include "common/error.hpp"
#include "common/rng.hpp"

namespace mpstep::surrogates {

nlohmann::json SpectralLayerConfig::to_json() const {
  return {{"modes", modes}, {"width", width}, {"layers", layers}, {"activation", to_string(activation)}};
}

SpectralLayerConfig SpectralLayerConfig::from_json(const nlohmann::json& j) {
  SpectralLayerConfig c;
  c.modes = j.at("modes").get<std::size_t>();
  c.width = j.at("width").get<std::size_t>();
  c.layers = j.at("layers").get<std::size_t>();
  c.activation = activation_from_string(j.at("activation").get<std::string>());
  return c;
}

FnoLiteSurrogate::FnoLiteSurrogate(SpectralLayerConfig config, ad::Shape state_shape,
                                   systems::Normalization normalization, std::uint64_t seed)
    : config_(config),
      state_shape_(std::move(state_shape)),
      normalization_(std::move(normalization)),
      norm_(normalization_, state_shape_) {
  if (state_shape_.size() != 3 || state_shape_[1] != state_shape_[2]) {
    throw ConfigError("fno_lite needs a square field state [C, N, N], got " + ad::to_string(state_shape_));
  }
  const std::size_t c = state_shape_[0];
  const std::size_t n = state_shape_[1];
  if (!fft::is_power_of_two(n)) throw ConfigError("fno_lite grid size must be a power of two");
  if (config_.modes < 1 || config_.modes > n / 2) {
    throw ConfigError("fno_lite modes must be in [1, N/2] = [1, " + std::to_string(n / 2) + "], got " +
                      std::to_string(config_.modes));
  }
  if (config_.width < 1) throw ConfigError("fno_lite width must be >= 1");
  const std::size_t w = config_.width;
  const std::size_t m = config_.modes;
  std::uint64_t stream = 0;
  auto next_seed = [&] { return derive_seed(seed, stream++); };

  params_.push_back({"lift_w", ad::Tensor::parameter({w, c}, fan_in_init(w * c, c, next_seed()))});
  params_.push_back({"lift_b", ad::Tensor::parameter({w}, std::vector<double>(w, 0.0))});
  const std::size_t spec_count = w * w * 2 * m * m;
  for (std::size_t l = 0; l < config_.layers; ++l) {
    const auto tag = std::to_string(l);
    // Complex weights with total variance 1/width per mode.
    params_.push_back({"spec" + tag + "_re",
                       ad::Tensor::parameter({w, w, 2 * m, m}, fan_in_init(spec_count, 2 * w, next_seed()))});
    params_.push_back({"spec" + tag + "_im",
                       ad::Tensor::parameter({w, w, 2 * m, m}, fan_in_init(spec_count, 2 * w, next_seed()))});
    params_.push_back({"bypass" + tag + "_w", ad::Tensor::parameter({w, w}, fan_in_init(w * w, w, next_seed()))});
    params_.push_back({"bypass" + tag + "_b", ad::Tensor::parameter({w}, std::vector<double>(w, 0.0))});
  }
  params_.push_back({"proj_w", ad::Tensor::parameter({c, w}, std::vector<double>(c * w, 0.0))});
  params_.push_back({"proj_b", ad::Tensor::parameter({c}, std::vector<double>(c, 0.0))});
}

ad::Tensor FnoLiteSurrogate::forward(const ad::Tensor& q) const {
  check_input(q);
  ad::Tensor h = ad::channel_linear((q - norm_.mean) / norm_.std, param(0), param(1));
  for (std::size_t l = 0; l < config_.layers; ++l) {
    const std::size_t base = 2 + 4 * l;
    const auto spectral = ad::real_part(
        ad::ifft2(ad::spectral_mix(ad::fft2(h), param(base), param(base + 1), config_.modes)));
    h = activate(config_.activation, spectral + ad::channel_linear(h, param(base + 2), param(base + 3)));
  }
  const std::size_t last = 2 + 4 * config_.layers;
  return q + ad::channel_linear(h, param(last), param(last + 1)) * norm_.std;
}

}  // namespace mpstep::surrogates
