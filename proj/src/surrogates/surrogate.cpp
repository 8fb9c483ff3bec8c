#include "surrogates/surrogate.hpp"

#include <cmath>
#include <random>

#include "autodiff/ops.hpp"
#include "common/error.hpp"
#include "common/rng.hpp"

namespace mpstep::surrogates {

Activation activation_from_string(const std::string& name) {
  if (name == "tanh") return Activation::Tanh;
  if (name == "gelu") return Activation::Gelu;
  if (name == "relu") return Activation::Relu;
  throw ConfigError("unknown activation '" + name + "' (expected tanh, gelu or relu)");
}

std::string to_string(Activation a) {
  switch (a) {
    case Activation::Tanh: return "tanh";
    case Activation::Gelu: return "gelu";
    case Activation::Relu: return "relu";
  }
  return "?";
}

ad::Tensor activate(Activation a, const ad::Tensor& x) {
  switch (a) {
    case Activation::Tanh: return ad::tanh(x);
    case Activation::Gelu: return ad::gelu(x);
    case Activation::Relu: return ad::relu(x);
  }
  return x;
}

std::vector<ad::Tensor> Surrogate::parameter_tensors() const {
  std::vector<ad::Tensor> out;
  for (auto& p : parameters()) out.push_back(p.tensor);
  return out;
}

std::size_t Surrogate::parameter_count() const {
  std::size_t n = 0;
  for (const auto& p : parameters()) n += p.tensor.numel();
  return n;
}

void Surrogate::check_input(const ad::Tensor& q) const {
  const auto& expect = state_shape();
  const auto& got = q.shape();
  bool ok = got.size() == expect.size() + 1;
  for (std::size_t i = 0; ok && i < expect.size(); ++i) ok = got[i + 1] == expect[i];
  if (!ok) {
    throw ShapeError(architecture() + " surrogate expects [B, " + ad::to_string(expect).substr(1) +
                     " input, got " + ad::to_string(got));
  }
}

NormalizationTensors::NormalizationTensors(const systems::Normalization& n, const ad::Shape& state_shape) {
  ad::Shape shape{n.mean.size()};
  for (std::size_t i = 1; i < state_shape.size(); ++i) shape.push_back(1);
  mean = ad::Tensor::from(shape, n.mean);
  std = ad::Tensor::from(shape, n.std);
}

std::vector<double> fan_in_init(std::size_t count, std::size_t fan_in, std::uint64_t seed) {
  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0 / std::sqrt(static_cast<double>(fan_in)));
  std::vector<double> out(count);
  for (auto& v : out) v = normal(rng);
  return out;
}

}  // namespace mpstep::surrogates
