#pragma once

#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "autodiff/tensor.hpp"
#include "systems/dataset.hpp"

namespace mpstep::surrogates {

struct NamedParameter {
  std::string name;
  ad::Tensor tensor;
};

enum class Activation { Tanh, Gelu, Relu };
Activation activation_from_string(const std::string& name);
std::string to_string(Activation a);
ad::Tensor activate(Activation a, const ad::Tensor& x);

// One-step map F(q) of a state to its successor. Inputs and outputs are
// batched: [B, state...] -> [B, state...].
class Surrogate {
 public:
  virtual ~Surrogate() = default;

  virtual std::string architecture() const = 0;
  virtual const ad::Shape& state_shape() const = 0;
  virtual ad::Tensor forward(const ad::Tensor& q) const = 0;
  virtual std::vector<NamedParameter> parameters() const { return {}; }
  // Architecture hyperparameters, enough to rebuild an identical surrogate.
  virtual nlohmann::json config() const { return nlohmann::json::object(); }
  virtual const systems::Normalization& normalization() const = 0;

  std::vector<ad::Tensor> parameter_tensors() const;
  std::size_t parameter_count() const;

 protected:
  void check_input(const ad::Tensor& q) const;
};

// Per-channel normalization constants shaped to broadcast against a batched
// state [B, C, ...].
struct NormalizationTensors {
  ad::Tensor mean;
  ad::Tensor std;

  NormalizationTensors(const systems::Normalization& n, const ad::Shape& state_shape);
};

// Deterministic Gaussian weights with variance 1/fan_in.
std::vector<double> fan_in_init(std::size_t count, std::size_t fan_in, std::uint64_t seed);

}  // namespace mpstep::surrogates
