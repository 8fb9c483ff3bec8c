#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "evaluation/metrics.hpp"

namespace mpstep::evaluation {

struct EvalConfig {
  std::size_t horizon = 100;  // states per rollout, including the initial condition
  std::size_t n_initial_conditions = 10;
  std::size_t ic_stride = 50;  // offset between initial conditions along a trajectory
  double vpt_threshold = 0.8;
  std::size_t spectrum_k_min = 1;
  std::size_t spectrum_k_max = 8;
  std::size_t spectrum_step = 0;  // 0 means the last state of the horizon
  std::size_t rmse_step = 10;
  double bound_factor = 10.0;
  std::size_t threads = 0;  // 0: hardware concurrency

  void validate() const;
  nlohmann::json to_json() const;
  static EvalConfig from_json(const nlohmann::json& j);
};

struct InitialCondition {
  std::size_t trajectory = 0;
  std::size_t offset = 0;
};

// Test-split initial conditions, spread over trajectories first. When the
// horizon fits in the stored trajectories every IC has ground truth for the
// whole horizon; otherwise the rollouts are truth-free.
std::vector<InitialCondition> initial_conditions(const systems::TrajectoryDataset& ds, const EvalConfig& cfg);

struct EvaluationReport {
  std::string label;
  double dt_effective = 1.0;
  std::size_t horizon = 0;
  bool field_state = false;
  std::vector<InitialCondition> ics;
  std::vector<RolloutResult> rollouts;
  std::vector<double> vpt;
  std::vector<double> persistence_vpt;
  std::vector<double> spectrum_error;  // field states with truth only
  // Mean over the initial conditions still alive at each step.
  MetricCurve rmse;
  MetricCurve correlation;
  MetricCurve persistence_rmse;
  MetricCurve persistence_correlation;

  std::size_t blow_up_count() const;
  // Earliest blow-up time over all rollouts, NaN without blow-ups.
  double first_blow_up_time() const;
  bool has_truth() const { return !rollouts.empty() && rollouts.front().has_truth(); }
};

EvaluationReport evaluate_model(const surrogates::Surrogate& model, const systems::TrajectoryDataset& ds,
                                const EvalConfig& cfg, const std::string& label);

struct ComparisonRow {
  std::string label;
  std::string metric;
  double value = 0.0;
  double delta_vs_first = 0.0;
};

struct Comparison {
  std::vector<ComparisonRow> rows;
  std::vector<std::string> warnings;

  double value(const std::string& label, const std::string& metric) const;
};

// Summary metrics of every report plus a persistence baseline row computed
// from the first report's ground truth. Horizons are cut to the shortest one.
Comparison compare_runs(const std::vector<EvaluationReport>& reports, const EvalConfig& cfg);

void write_curve_csv(const MetricCurve& curve, const std::filesystem::path& path);
void write_comparison_csv(const Comparison& table, const std::filesystem::path& path);
// Writes rmse/correlation/persistence curves (and a summary) into `dir`.
// Writes IC-averaged curves, per-IC curves (per_ic.csv), spectra at the
// spectrum step (spectra.csv, field states), rollout table and summary.
void write_report(const EvaluationReport& report, const systems::TrajectoryDataset& ds, const EvalConfig& cfg,
                  const std::filesystem::path& dir);
// Predicted rollouts as a dataset file (rollouts cut to the shortest one).
void export_rollouts(const EvaluationReport& report, const systems::SystemSpec& spec,
                     const std::filesystem::path& path);

}  // namespace mpstep::evaluation
