#include "surrogates/mlp.hpp"

#include "autodiff/ops.hpp"
#include "common/error.hpp"
#include "common/rng.hpp"

namespace mpstep::surrogates {

nlohmann::json MlpConfig::to_json() const {
  return {{"hidden", hidden}, {"layers", layers}, {"activation", to_string(activation)}};
}

MlpConfig MlpConfig::from_json(const nlohmann::json& j) {
  MlpConfig c;
  c.hidden = j.at("hidden").get<std::size_t>();
  c.layers = j.at("layers").get<std::size_t>();
  c.activation = activation_from_string(j.at("activation").get<std::string>());
  return c;
}

MlpSurrogate::MlpSurrogate(MlpConfig config, ad::Shape state_shape,
                           systems::Normalization normalization, std::uint64_t seed)
    : config_(config),
      state_shape_(std::move(state_shape)),
      normalization_(std::move(normalization)),
      norm_(normalization_, state_shape_) {
  if (state_shape_.size() != 1) throw ConfigError("mlp surrogate needs a vector state");
  if (config_.hidden == 0 || config_.layers == 0) throw ConfigError("mlp needs hidden >= 1 and layers >= 1");
  const std::size_t dim = state_shape_[0];
  std::size_t fan_in = dim;
  for (std::size_t l = 0; l < config_.layers; ++l) {
    const auto h = config_.hidden;
    const auto tag = std::to_string(l);
    params_.push_back({"w" + tag, ad::Tensor::parameter({fan_in, h}, fan_in_init(fan_in * h, fan_in, derive_seed(seed, l)))});
    params_.push_back({"b" + tag, ad::Tensor::parameter({h}, std::vector<double>(h, 0.0))});
    fan_in = h;
  }
  params_.push_back({"w_out", ad::Tensor::parameter({fan_in, dim}, std::vector<double>(fan_in * dim, 0.0))});
  params_.push_back({"b_out", ad::Tensor::parameter({dim}, std::vector<double>(dim, 0.0))});
}

ad::Tensor MlpSurrogate::forward(const ad::Tensor& q) const {
  check_input(q);
  ad::Tensor h = (q - norm_.mean) / norm_.std;
  for (std::size_t l = 0; l < config_.layers; ++l) {
    h = activate(config_.activation, ad::matmul(h, params_[2 * l].tensor) + params_[2 * l + 1].tensor);
  }
  const auto& w_out = params_[2 * config_.layers].tensor;
  const auto& b_out = params_[2 * config_.layers + 1].tensor;
  return q + (ad::matmul(h, w_out) + b_out) * norm_.std;
}

}  // namespace mpstep::surrogates
