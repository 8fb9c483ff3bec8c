#pragma once

#include <map>
#include <string>
#include <vector>

#include "surrogates/surrogate.hpp"
#include "training/config.hpp"

namespace mpstep::training {

struct AdamSlot {
  std::vector<double> m;
  std::vector<double> v;
  std::size_t step = 0;
};

// Adam over named parameter slots. Each slot keeps its own step counter, so
// parameters that are touched irregularly get the right bias correction.
class Adam {
 public:
  explicit Adam(AdamConfig config = {});

  // Global L2 norm of the gradients of `params` (absent grads count as zero).
  static double gradient_norm(const std::vector<surrogates::NamedParameter>& params);

  // Clips to the configured global norm, then updates every parameter in
  // place. Returns the pre-clip norm. Throws NumericalError naming the first
  // parameter with a non-finite gradient; no parameter is modified then.
  double step(const std::vector<surrogates::NamedParameter>& params);

  const AdamConfig& config() const { return config_; }
  void set_lr(double lr) { config_.lr = lr; }
  std::size_t steps_taken() const { return steps_; }
  const std::map<std::string, AdamSlot>& slots() const { return slots_; }
  std::map<std::string, AdamSlot>& slots() { return slots_; }
  void set_steps_taken(std::size_t n) { steps_ = n; }
  void clear() {
    slots_.clear();
    steps_ = 0;
  }

 private:
  AdamConfig config_;
  std::map<std::string, AdamSlot> slots_;
  std::size_t steps_ = 0;
};

}  // namespace mpstep::training
