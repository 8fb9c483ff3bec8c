#include "evaluation/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>

#include "autodiff/fft.hpp"
#include "common/error.hpp"
#include "systems/kolmogorov2d.hpp"

namespace mpstep::evaluation {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double anomaly_correlation(std::span<const double> p, std::span<const double> t, std::span<const double> clim) {
  double pt = 0.0, pp = 0.0, tt = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double c = clim.empty() ? 0.0 : clim[i];
    const double a = p[i] - c, b = t[i] - c;
    pt += a * b;
    pp += a * a;
    tt += b * b;
  }
  if (pp == 0.0 || tt == 0.0) return kNaN;
  return pt / std::sqrt(pp * tt);
}

double rms_difference(std::span<const double> a, std::span<const double> b) {
  double sq = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) sq += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(sq / static_cast<double>(a.size()));
}

void require_truth(const RolloutResult& r, const char* what) {
  if (!r.has_truth() && r.length() > 0) throw ConfigError(std::string(what) + " needs a rollout with ground truth");
}

}  // namespace

std::span<const double> RolloutResult::predicted_at(std::size_t t) const {
  return std::span<const double>(predicted).subspan(t * state_size(), state_size());
}

std::span<const double> RolloutResult::truth_at(std::size_t t) const {
  return std::span<const double>(truth).subspan(t * state_size(), state_size());
}

void RolloutResult::truncate(std::size_t n) {
  if (n >= length()) return;
  predicted.resize(n * state_size());
  if (has_truth()) truth.resize(n * state_size());
}

double stability_bound(const systems::TrajectoryDataset& ds, double factor) {
  double peak = 0.0;
  for (std::size_t traj : ds.trajectories(systems::Split::Train)) {
    for (double v : ds.trajectory(traj)) peak = std::max(peak, std::abs(v));
  }
  return factor * peak;
}

RolloutResult rollout(const surrogates::Surrogate& model, std::span<const double> q0, std::size_t T,
                      double dt_effective, double bound, std::span<const double> truth) {
  RolloutResult r;
  r.state_shape = model.state_shape();
  r.dt_effective = dt_effective;
  const std::size_t size = r.state_size();
  if (q0.size() != size) throw ShapeError("rollout: initial condition does not match the surrogate state shape");
  if (!truth.empty() && truth.size() < T * size) throw ShapeError("rollout: ground truth shorter than the horizon");
  if (T == 0) return r;

  ad::NoGradGuard no_grad;
  ad::Shape batched{1};
  batched.insert(batched.end(), r.state_shape.begin(), r.state_shape.end());
  r.predicted.reserve(T * size);
  ad::Tensor q = ad::Tensor::from(batched, std::vector<double>(q0.begin(), q0.end()));
  for (std::size_t t = 0; t < T; ++t) {
    if (t > 0) q = model.forward(q);
    bool bad = false;
    for (double v : q.values()) {
      if (!std::isfinite(v) || std::abs(v) > bound) {
        bad = true;
        break;
      }
    }
    if (bad) {
      r.blow_up_step = t;
      break;
    }
    r.predicted.insert(r.predicted.end(), q.values().begin(), q.values().end());
  }
  if (!truth.empty()) r.truth.assign(truth.begin(), truth.begin() + static_cast<std::ptrdiff_t>(r.predicted.size()));
  return r;
}

MetricCurve rmse_curve(const RolloutResult& result) {
  require_truth(result, "rmse_curve");
  MetricCurve c{"rmse", "state units", {}, result.dt_effective};
  for (std::size_t t = 0; t < result.length(); ++t) {
    c.values.push_back(rms_difference(result.predicted_at(t), result.truth_at(t)));
  }
  return c;
}

MetricCurve persistence_baseline(const RolloutResult& result) {
  require_truth(result, "persistence_baseline");
  MetricCurve c{"persistence_rmse", "state units", {}, result.dt_effective};
  for (std::size_t t = 0; t < result.length(); ++t) {
    c.values.push_back(rms_difference(result.truth_at(0), result.truth_at(t)));
  }
  return c;
}

MetricCurve correlation_curve(const RolloutResult& result, std::span<const double> clim) {
  require_truth(result, "correlation_curve");
  MetricCurve c{"correlation", "1", {}, result.dt_effective};
  for (std::size_t t = 0; t < result.length(); ++t) {
    c.values.push_back(anomaly_correlation(result.predicted_at(t), result.truth_at(t), clim));
  }
  return c;
}

MetricCurve persistence_correlation(const RolloutResult& result, std::span<const double> clim) {
  require_truth(result, "persistence_correlation");
  MetricCurve c{"persistence_correlation", "1", {}, result.dt_effective};
  for (std::size_t t = 0; t < result.length(); ++t) {
    c.values.push_back(anomaly_correlation(result.truth_at(0), result.truth_at(t), clim));
  }
  return c;
}

std::vector<double> climatology(const systems::TrajectoryDataset& ds) {
  const std::size_t size = ds.state_size();
  std::vector<double> mean(size, 0.0);
  std::size_t count = 0;
  for (std::size_t traj : ds.trajectories(systems::Split::Train)) {
    for (std::size_t t = 0; t < ds.n_steps; ++t) {
      const auto s = ds.state(traj, t);
      for (std::size_t i = 0; i < size; ++i) mean[i] += s[i];
      ++count;
    }
  }
  if (count > 0) {
    for (auto& m : mean) m /= static_cast<double>(count);
  }
  return mean;
}

MetricCurve energy_spectrum(std::span<const double> velocity, std::size_t n) {
  if (n == 0 || velocity.size() != 2 * n * n) {
    throw ShapeError("energy_spectrum needs a square velocity field [2 x N x N]");
  }
  std::vector<std::complex<double>> hat(velocity.begin(), velocity.end());
  fft::fft2_inplace(hat, 2, n, n, false);
  const auto kmax = static_cast<std::size_t>(std::ceil(std::sqrt(2.0) * static_cast<double>(n) / 2.0)) + 1;
  MetricCurve c{"energy_spectrum", "energy per wavenumber", std::vector<double>(kmax + 1, 0.0), 1.0};
  const double nn = static_cast<double>(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const double ky = static_cast<double>(fft::wavenumber(i, n));
      const double kx = static_cast<double>(fft::wavenumber(j, n));
      const auto bin = static_cast<std::size_t>(std::floor(std::sqrt(kx * kx + ky * ky) + 0.5));
      const double e = 0.5 * (std::norm(hat[i * n + j]) + std::norm(hat[n * n + i * n + j])) / nn;
      c.values[bin] += e;
    }
  }
  return c;
}

MetricCurve vorticity_energy_spectrum(std::span<const double> vorticity, const systems::SystemSpec& spec) {
  return energy_spectrum(systems::velocity_from_vorticity(vorticity, spec), spec.grid_size());
}

double spectrum_relative_error(const MetricCurve& a, const MetricCurve& reference, std::size_t k_min,
                               std::size_t k_max) {
  if (k_min > k_max || k_max >= a.values.size() || k_max >= reference.values.size()) {
    throw ConfigError("spectrum band [" + std::to_string(k_min) + ", " + std::to_string(k_max) +
                      "] is outside the spectrum");
  }
  double sum = 0.0;
  for (std::size_t k = k_min; k <= k_max; ++k) {
    sum += std::abs(a.values[k] - reference.values[k]) / reference.values[k];
  }
  return sum / static_cast<double>(k_max - k_min + 1);
}

double valid_prediction_time(const MetricCurve& corr, double threshold) {
  for (std::size_t t = 0; t < corr.values.size(); ++t) {
    if (!(corr.values[t] >= threshold)) return static_cast<double>(t) * corr.spacing;
  }
  return static_cast<double>(corr.values.size()) * corr.spacing;
}

double median(std::vector<double> values) {
  if (values.empty()) return kNaN;
  std::sort(values.begin(), values.end());
  const std::size_t mid = values.size() / 2;
  return values.size() % 2 ? values[mid] : 0.5 * (values[mid - 1] + values[mid]);
}

}  // namespace mpstep::evaluation
