#pragma once

// Small random fixtures shared by the unit and acceptance suites.

#include <random>
#include <vector>

#include "autodiff/tensor.hpp"
#include "surrogates/mlp.hpp"
#include "training/discontinuity_bank.hpp"
#include "training/losses.hpp"

namespace testsupport {

inline std::vector<double> random_values(std::size_t n, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> v(n);
  for (auto& x : v) x = u(rng);
  return v;
}

inline mpstep::ad::Tensor random_param(mpstep::ad::Shape shape, std::mt19937_64& rng, double lo = -1.0,
                                       double hi = 1.0) {
  const auto n = mpstep::ad::numel(shape);
  return mpstep::ad::Tensor::parameter(std::move(shape), random_values(n, rng, lo, hi));
}

inline mpstep::training::Window random_window(std::size_t length, std::size_t batch, std::size_t dim,
                                              std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> d(0.0, 1.0);
  mpstep::training::Window w;
  for (std::size_t t = 0; t < length; ++t) {
    std::vector<double> v(batch * dim);
    for (auto& x : v) x = d(rng);
    w.push_back(mpstep::ad::Tensor::from({batch, dim}, std::move(v)));
  }
  return w;
}

// Two-layer tanh MLP with every parameter perturbed away from its initial
// value (the output layer starts at zero otherwise).
inline mpstep::surrogates::MlpSurrogate tiny_mlp(std::size_t dim, std::uint64_t seed) {
  mpstep::surrogates::MlpSurrogate m({5, 2, mpstep::surrogates::Activation::Tanh}, {dim},
                                     {std::vector<double>(dim, 0.1), std::vector<double>(dim, 1.5)}, seed);
  std::mt19937_64 rng(seed + 1);
  std::normal_distribution<double> d(0.0, 0.3);
  for (auto& p : m.parameters()) {
    for (auto& v : p.tensor.mutable_values()) v += d(rng);
  }
  return m;
}

inline void randomize_bank(mpstep::training::DiscontinuityBank& bank, const std::vector<std::size_t>& ids,
                           std::size_t s, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> d(0.0, 0.2);
  for (std::size_t w : ids) {
    for (std::size_t k = 1; k <= s; ++k) {
      for (auto& v : bank.get(w, k).mutable_values()) v = d(rng);
    }
  }
}

}  // namespace testsupport
