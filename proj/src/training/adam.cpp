#include "training/adam.hpp"

#include <cmath>

#include "common/error.hpp"

namespace mpstep::training {

Adam::Adam(AdamConfig config) : config_(config) { config_.validate(); }

double Adam::gradient_norm(const std::vector<surrogates::NamedParameter>& params) {
  double sq = 0.0;
  for (const auto& p : params) {
    if (!p.tensor.has_grad()) continue;
    for (double g : p.tensor.grad()) sq += g * g;
  }
  return std::sqrt(sq);
}

double Adam::step(const std::vector<surrogates::NamedParameter>& params) {
  for (const auto& p : params) {
    if (!p.tensor.has_grad()) continue;
    for (double g : p.tensor.grad()) {
      if (!std::isfinite(g)) throw NumericalError("non-finite gradient in parameter '" + p.name + "'");
    }
  }
  const double norm = gradient_norm(params);
  const double scale = (config_.clip > 0.0 && norm > config_.clip) ? config_.clip / norm : 1.0;
  const double b1 = config_.beta1, b2 = config_.beta2;
  for (const auto& p : params) {
    ad::Tensor tensor = p.tensor;
    auto values = tensor.mutable_values();
    AdamSlot& slot = slots_[p.name];
    if (slot.m.size() != values.size()) {
      slot.m.assign(values.size(), 0.0);
      slot.v.assign(values.size(), 0.0);
      slot.step = 0;
    }
    ++slot.step;
    const double c1 = 1.0 - std::pow(b1, static_cast<double>(slot.step));
    const double c2 = 1.0 - std::pow(b2, static_cast<double>(slot.step));
    const bool has = p.tensor.has_grad();
    const std::vector<double> grad = has ? p.tensor.grad() : std::vector<double>{};
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double g = has ? grad[i] * scale : 0.0;
      slot.m[i] = b1 * slot.m[i] + (1.0 - b1) * g;
      slot.v[i] = b2 * slot.v[i] + (1.0 - b2) * g * g;
      values[i] -= config_.lr * (slot.m[i] / c1) / (std::sqrt(slot.v[i] / c2) + config_.eps);
    }
  }
  ++steps_;
  return norm;
}

}  // namespace mpstep::training
