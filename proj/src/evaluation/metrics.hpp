#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "autodiff/tensor.hpp"
#include "surrogates/surrogate.hpp"
#include "systems/dataset.hpp"

namespace mpstep::evaluation {

// States are flat [T x state...]; index 0 is the initial condition and index
// t lies t * dt_effective after it. `truth` is either empty (a truth-free
// rollout) or as long as `predicted`.
struct RolloutResult {
  ad::Shape state_shape;
  std::vector<double> predicted;
  std::vector<double> truth;
  double dt_effective = 1.0;
  std::optional<std::size_t> blow_up_step;

  std::size_t state_size() const { return ad::numel(state_shape); }
  std::size_t length() const { return state_size() == 0 ? 0 : predicted.size() / state_size(); }
  bool has_truth() const { return !truth.empty(); }
  std::span<const double> predicted_at(std::size_t t) const;
  std::span<const double> truth_at(std::size_t t) const;
  void truncate(std::size_t length);
};

struct MetricCurve {
  std::string name;
  std::string units;
  std::vector<double> values;
  double spacing = 1.0;  // time (or wavenumber) step between entries
};

// ||q||_inf bound used for blow-up detection: factor * max |train state|.
double stability_bound(const systems::TrajectoryDataset& ds, double factor = 10.0);

// Autoregressive rollout of T states starting at q0 (T = 0 gives an empty
// result). Stops at the first non-finite state or the first state whose
// ||.||_inf exceeds `bound`; that index is recorded as blow_up_step and the
// result is truncated before it. `truth`, when given, must hold at least T
// states and is cut to the same length.
RolloutResult rollout(const surrogates::Surrogate& model, std::span<const double> q0, std::size_t T,
                      double dt_effective, double bound, std::span<const double> truth = {});

MetricCurve rmse_curve(const RolloutResult& result);
MetricCurve persistence_baseline(const RolloutResult& result);

// Anomaly correlation about `climatology` (one value per state element;
// empty means zero): sum(a_p a_t) / sqrt(sum a_p^2 * sum a_t^2). NaN where
// either anomaly vanishes.
MetricCurve correlation_curve(const RolloutResult& result, std::span<const double> climatology = {});
MetricCurve persistence_correlation(const RolloutResult& result, std::span<const double> climatology = {});

// Per-element mean over every state of the train split.
std::vector<double> climatology(const systems::TrajectoryDataset& ds);

// E(k) for k = 0..kmax, summing 1/2 (|u_hat|^2 + |v_hat|^2) / N^2 over the
// annulus k - 1/2 <= |k_vec| < k + 1/2, so that sum_k E(k) equals the domain
// mean 1/2 <u^2 + v^2>. `velocity` holds u then v, each N x N.
MetricCurve energy_spectrum(std::span<const double> velocity, std::size_t n);
// Spectrum of a Kolmogorov vorticity state.
MetricCurve vorticity_energy_spectrum(std::span<const double> vorticity, const systems::SystemSpec& spec);

// Mean over k in [k_min, k_max] of |E_a(k) - E_b(k)| / E_b(k).
double spectrum_relative_error(const MetricCurve& a, const MetricCurve& reference, std::size_t k_min,
                               std::size_t k_max);

// First t * spacing with value < threshold (NaN counts as below); the full
// length * spacing when the curve never drops below.
double valid_prediction_time(const MetricCurve& corr, double threshold = 0.8);

double median(std::vector<double> values);

}  // namespace mpstep::evaluation
