#include "evaluation/evaluate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <thread>

#include "common/error.hpp"

namespace mpstep::evaluation {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

MetricCurve mean_curve(const std::vector<MetricCurve>& curves, const std::string& name, double spacing) {
  MetricCurve out{name, curves.empty() ? "" : curves.front().units, {}, spacing};
  std::size_t len = 0;
  for (const auto& c : curves) len = std::max(len, c.values.size());
  for (std::size_t t = 0; t < len; ++t) {
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& c : curves) {
      if (t < c.values.size() && !std::isnan(c.values[t])) {
        sum += c.values[t];
        ++n;
      }
    }
    out.values.push_back(n > 0 ? sum / static_cast<double>(n) : kNaN);
  }
  return out;
}

double mean(const std::vector<double>& v) {
  if (v.empty()) return kNaN;
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double mean_prefix(const MetricCurve& c, std::size_t len) {
  double s = 0.0;
  std::size_t n = 0;
  for (std::size_t t = 0; t < std::min(len, c.values.size()); ++t) {
    if (!std::isnan(c.values[t])) {
      s += c.values[t];
      ++n;
    }
  }
  return n > 0 ? s / static_cast<double>(n) : kNaN;
}

double at(const MetricCurve& c, std::size_t t) { return t < c.values.size() ? c.values[t] : kNaN; }

MetricCurve truncated(MetricCurve c, std::size_t len) {
  if (c.values.size() > len) c.values.resize(len);
  return c;
}

}  // namespace

void EvalConfig::validate() const {
  if (horizon < 2) throw ConfigError("evaluation horizon must be >= 2 states");
  if (n_initial_conditions < 1) throw ConfigError("evaluation needs at least one initial condition");
  if (ic_stride < 1) throw ConfigError("evaluation ic_stride must be >= 1");
  if (spectrum_k_min > spectrum_k_max) throw ConfigError("spectrum band is empty");
  if (spectrum_step >= horizon) throw ConfigError("spectrum_step must lie inside the horizon");
  if (rmse_step >= horizon) throw ConfigError("rmse_step must lie inside the horizon");
  if (!(bound_factor > 0.0)) throw ConfigError("bound_factor must be > 0");
}

nlohmann::json EvalConfig::to_json() const {
  return {{"horizon", horizon},
          {"n_initial_conditions", n_initial_conditions},
          {"ic_stride", ic_stride},
          {"vpt_threshold", vpt_threshold},
          {"spectrum_band", {spectrum_k_min, spectrum_k_max}},
          {"spectrum_step", spectrum_step},
          {"rmse_step", rmse_step},
          {"bound_factor", bound_factor},
          {"threads", threads}};
}

EvalConfig EvalConfig::from_json(const nlohmann::json& j) {
  EvalConfig c;
  c.horizon = j.at("horizon").get<std::size_t>();
  c.n_initial_conditions = j.at("n_initial_conditions").get<std::size_t>();
  c.ic_stride = j.at("ic_stride").get<std::size_t>();
  c.vpt_threshold = j.at("vpt_threshold").get<double>();
  c.spectrum_k_min = j.at("spectrum_band").at(0).get<std::size_t>();
  c.spectrum_k_max = j.at("spectrum_band").at(1).get<std::size_t>();
  c.spectrum_step = j.at("spectrum_step").get<std::size_t>();
  c.rmse_step = j.at("rmse_step").get<std::size_t>();
  c.bound_factor = j.at("bound_factor").get<double>();
  c.threads = j.at("threads").get<std::size_t>();
  c.validate();
  return c;
}

std::vector<InitialCondition> initial_conditions(const systems::TrajectoryDataset& ds, const EvalConfig& cfg) {
  const auto test = ds.trajectories(systems::Split::Test);
  if (test.empty()) throw ConfigError("dataset has no test trajectories");
  const bool with_truth = cfg.horizon <= ds.n_steps;
  const std::size_t needed = with_truth ? cfg.horizon : 1;
  std::vector<InitialCondition> out;
  for (std::size_t offset = 0; offset + needed <= ds.n_steps && out.size() < cfg.n_initial_conditions;
       offset += cfg.ic_stride) {
    for (std::size_t traj : test) {
      if (out.size() == cfg.n_initial_conditions) break;
      out.push_back({traj, offset});
    }
  }
  if (out.size() < cfg.n_initial_conditions) {
    throw ConfigError("test split supports only " + std::to_string(out.size()) + " initial conditions of horizon " +
                      std::to_string(cfg.horizon) + " at stride " + std::to_string(cfg.ic_stride) + ", " +
                      std::to_string(cfg.n_initial_conditions) + " requested");
  }
  return out;
}

std::size_t EvaluationReport::blow_up_count() const {
  return static_cast<std::size_t>(
      std::count_if(rollouts.begin(), rollouts.end(), [](const RolloutResult& r) { return r.blow_up_step.has_value(); }));
}

double EvaluationReport::first_blow_up_time() const {
  double first = kNaN;
  for (const auto& r : rollouts) {
    if (!r.blow_up_step) continue;
    const double t = static_cast<double>(*r.blow_up_step) * r.dt_effective;
    if (std::isnan(first) || t < first) first = t;
  }
  return first;
}

EvaluationReport evaluate_model(const surrogates::Surrogate& model, const systems::TrajectoryDataset& ds,
                                const EvalConfig& cfg, const std::string& label) {
  cfg.validate();
  if (model.state_shape() != ds.state_shape) {
    throw ConfigError("surrogate state shape " + ad::to_string(model.state_shape()) + " does not match dataset " +
                      ad::to_string(ds.state_shape));
  }
  EvaluationReport report;
  report.label = label;
  report.dt_effective = ds.dt_effective();
  report.horizon = cfg.horizon;
  report.field_state = ds.spec.kind == systems::SystemKind::Kolmogorov2d;
  report.ics = initial_conditions(ds, cfg);
  const bool with_truth = cfg.horizon <= ds.n_steps;
  const double bound = stability_bound(ds, cfg.bound_factor);
  const std::size_t size = ds.state_size();

  report.rollouts.resize(report.ics.size());
  auto work = [&](std::size_t i) {
    const auto& ic = report.ics[i];
    const auto traj = ds.trajectory(ic.trajectory);
    const auto q0 = traj.subspan(ic.offset * size, size);
    const auto truth = with_truth ? traj.subspan(ic.offset * size, cfg.horizon * size) : std::span<const double>{};
    report.rollouts[i] = rollout(model, q0, cfg.horizon, ds.dt_effective(), bound, truth);
  };
  std::size_t threads = cfg.threads == 0 ? std::max(1u, std::thread::hardware_concurrency()) : cfg.threads;
  threads = std::min(threads, report.ics.size());
  if (threads <= 1) {
    for (std::size_t i = 0; i < report.ics.size(); ++i) work(i);
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < threads; ++w) {
      pool.emplace_back([&, w] {
        for (std::size_t i = w; i < report.ics.size(); i += threads) work(i);
      });
    }
    for (auto& t : pool) t.join();
  }

  if (!with_truth) return report;
  const auto clim = climatology(ds);
  std::vector<MetricCurve> rmse, corr, prmse, pcorr;
  const std::size_t spectrum_step = cfg.spectrum_step == 0 ? cfg.horizon - 1 : cfg.spectrum_step;
  for (const auto& r : report.rollouts) {
    rmse.push_back(rmse_curve(r));
    corr.push_back(correlation_curve(r, clim));
    prmse.push_back(persistence_baseline(r));
    pcorr.push_back(persistence_correlation(r, clim));
    report.vpt.push_back(valid_prediction_time(corr.back(), cfg.vpt_threshold));
    report.persistence_vpt.push_back(valid_prediction_time(pcorr.back(), cfg.vpt_threshold));
    if (report.field_state) {
      if (r.length() > spectrum_step) {
        const auto pred = vorticity_energy_spectrum(r.predicted_at(spectrum_step), ds.spec);
        const auto truth = vorticity_energy_spectrum(r.truth_at(spectrum_step), ds.spec);
        report.spectrum_error.push_back(
            spectrum_relative_error(pred, truth, cfg.spectrum_k_min, cfg.spectrum_k_max));
      } else {
        report.spectrum_error.push_back(std::numeric_limits<double>::infinity());
      }
    }
  }
  report.rmse = mean_curve(rmse, "rmse", report.dt_effective);
  report.correlation = mean_curve(corr, "correlation", report.dt_effective);
  report.persistence_rmse = mean_curve(prmse, "persistence_rmse", report.dt_effective);
  report.persistence_correlation = mean_curve(pcorr, "persistence_correlation", report.dt_effective);
  return report;
}

double Comparison::value(const std::string& label, const std::string& metric) const {
  for (const auto& r : rows) {
    if (r.label == label && r.metric == metric) return r.value;
  }
  throw ConfigError("comparison has no metric '" + metric + "' for '" + label + "'");
}

Comparison compare_runs(const std::vector<EvaluationReport>& reports, const EvalConfig& cfg) {
  Comparison table;
  if (reports.empty()) return table;
  std::size_t horizon = std::numeric_limits<std::size_t>::max();
  for (const auto& r : reports) horizon = std::min(horizon, r.horizon);
  std::string truncated_labels;
  for (const auto& r : reports) {
    if (r.horizon > horizon) truncated_labels += (truncated_labels.empty() ? "'" : ", '") + r.label + "'";
  }
  if (!truncated_labels.empty()) {
    table.warnings.push_back("horizons differ; " + truncated_labels + " truncated to " + std::to_string(horizon) +
                             " states");
  }

  struct Summary {
    std::string label;
    std::map<std::string, double> metrics;
    double blow_up_rate = 0.0;
    double first_blow_up = kNaN;
  };
  std::vector<Summary> summaries;
  for (const auto& r : reports) {
    Summary s{r.label, {}, 0.0, r.first_blow_up_time()};
    const double n = static_cast<double>(std::max<std::size_t>(r.rollouts.size(), 1));
    s.blow_up_rate = static_cast<double>(r.blow_up_count()) / n;
    s.metrics["blow_up_count"] = static_cast<double>(r.blow_up_count());
    s.metrics["blow_up_rate"] = s.blow_up_rate;
    s.metrics["first_blow_up_time"] = s.first_blow_up;
    if (r.has_truth()) {
      std::vector<double> vpt;
      for (double v : r.vpt) vpt.push_back(std::min(v, static_cast<double>(horizon) * r.dt_effective));
      s.metrics["vpt_median"] = median(vpt);
      s.metrics["vpt_mean"] = mean(vpt);
      s.metrics["rmse_at_step"] = at(truncated(r.rmse, horizon), cfg.rmse_step);
      s.metrics["rmse_mean"] = mean_prefix(r.rmse, horizon);
      if (r.field_state) s.metrics["spectrum_rel_error"] = mean(r.spectrum_error);
    }
    summaries.push_back(std::move(s));
  }
  const auto& base = reports.front();
  if (base.has_truth()) {
    Summary p{"persistence", {}, 0.0, kNaN};
    std::vector<double> vpt;
    for (double v : base.persistence_vpt) vpt.push_back(std::min(v, static_cast<double>(horizon) * base.dt_effective));
    p.metrics["blow_up_count"] = 0.0;
    p.metrics["blow_up_rate"] = 0.0;
    p.metrics["first_blow_up_time"] = kNaN;
    p.metrics["vpt_median"] = median(vpt);
    p.metrics["vpt_mean"] = mean(vpt);
    p.metrics["rmse_at_step"] = at(truncated(base.persistence_rmse, horizon), cfg.rmse_step);
    p.metrics["rmse_mean"] = mean_prefix(base.persistence_rmse, horizon);
    summaries.push_back(std::move(p));
  }

  // Fewer blow-ups rank higher; among equal rates, later first blow-up ranks higher.
  auto key = [](const Summary& s) {
    const double later = std::isnan(s.first_blow_up) ? std::numeric_limits<double>::infinity() : s.first_blow_up;
    return std::make_pair(s.blow_up_rate, -later);
  };
  for (auto& s : summaries) {
    std::size_t better = 0;
    for (const auto& o : summaries) {
      if (key(o) < key(s)) ++better;
    }
    s.metrics["stability_rank"] = static_cast<double>(better + 1);
  }

  const auto& first = summaries.front().metrics;
  for (const auto& s : summaries) {
    for (const auto& [metric, value] : s.metrics) {
      const auto it = first.find(metric);
      const double delta = it == first.end() ? kNaN : value - it->second;
      table.rows.push_back({s.label, metric, value, delta});
    }
  }
  return table;
}

void write_curve_csv(const MetricCurve& curve, const std::filesystem::path& path) {
  if (!path.parent_path().empty()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << "t_index,time,value\n";
  for (std::size_t t = 0; t < curve.values.size(); ++t) {
    out << t << ',' << fmt(static_cast<double>(t) * curve.spacing) << ',' << fmt(curve.values[t]) << '\n';
  }
}

void write_comparison_csv(const Comparison& table, const std::filesystem::path& path) {
  if (!path.parent_path().empty()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << "label,metric,value,delta_vs_first\n";
  for (const auto& r : table.rows) {
    out << r.label << ',' << r.metric << ',' << fmt(r.value) << ',' << fmt(r.delta_vs_first) << '\n';
  }
}

void write_report(const EvaluationReport& report, const systems::TrajectoryDataset& ds, const EvalConfig& cfg,
                  const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  if (report.has_truth()) {
    write_curve_csv(report.rmse, dir / "rmse.csv");
    write_curve_csv(report.correlation, dir / "correlation.csv");
    write_curve_csv(report.persistence_rmse, dir / "persistence_rmse.csv");
    write_curve_csv(report.persistence_correlation, dir / "persistence_correlation.csv");
  }
  write_comparison_csv(compare_runs({report}, cfg), dir / "summary.csv");
  std::ofstream out(dir / "rollouts.csv", std::ios::trunc);
  if (!out) throw IoError("cannot write " + (dir / "rollouts.csv").string());
  out << "ic,trajectory,offset,length,blow_up_step,vpt\n";
  for (std::size_t i = 0; i < report.rollouts.size(); ++i) {
    const auto& r = report.rollouts[i];
    out << i << ',' << report.ics[i].trajectory << ',' << report.ics[i].offset << ',' << r.length() << ','
        << (r.blow_up_step ? std::to_string(*r.blow_up_step) : std::string()) << ','
        << (i < report.vpt.size() ? fmt(report.vpt[i]) : std::string()) << '\n';
  }
  if (!report.has_truth()) return;

  const auto clim = climatology(ds);
  std::ofstream per(dir / "per_ic.csv", std::ios::trunc);
  if (!per) throw IoError("cannot write " + (dir / "per_ic.csv").string());
  per << "ic,t_index,time,rmse,correlation,persistence_rmse,persistence_correlation\n";
  for (std::size_t i = 0; i < report.rollouts.size(); ++i) {
    const auto& r = report.rollouts[i];
    const auto rmse = rmse_curve(r);
    const auto corr = correlation_curve(r, clim);
    const auto prmse = persistence_baseline(r);
    const auto pcorr = persistence_correlation(r, clim);
    for (std::size_t t = 0; t < rmse.values.size(); ++t) {
      per << i << ',' << t << ',' << fmt(static_cast<double>(t) * report.dt_effective) << ',' << fmt(rmse.values[t])
          << ',' << fmt(corr.values[t]) << ',' << fmt(prmse.values[t]) << ',' << fmt(pcorr.values[t]) << '\n';
    }
  }

  if (!report.field_state) return;
  const std::size_t step = cfg.spectrum_step == 0 ? cfg.horizon - 1 : cfg.spectrum_step;
  std::ofstream spec(dir / "spectra.csv", std::ios::trunc);
  if (!spec) throw IoError("cannot write " + (dir / "spectra.csv").string());
  spec << "ic,t_index,k,predicted,truth\n";
  for (std::size_t i = 0; i < report.rollouts.size(); ++i) {
    const auto& r = report.rollouts[i];
    if (r.length() <= step) continue;
    const auto pred = vorticity_energy_spectrum(r.predicted_at(step), ds.spec);
    const auto truth = vorticity_energy_spectrum(r.truth_at(step), ds.spec);
    for (std::size_t k = 0; k < pred.values.size(); ++k) {
      spec << i << ',' << step << ',' << k << ',' << fmt(pred.values[k]) << ',' << fmt(truth.values[k]) << '\n';
    }
  }
}

void export_rollouts(const EvaluationReport& report, const systems::SystemSpec& spec,
                     const std::filesystem::path& path) {
  if (report.rollouts.empty()) throw ConfigError("nothing to export");
  std::size_t len = std::numeric_limits<std::size_t>::max();
  for (const auto& r : report.rollouts) len = std::min(len, r.length());
  if (len == 0) throw ConfigError("a rollout blew up at its first state; nothing to export");
  systems::TrajectoryDataset ds;
  ds.spec = spec;
  ds.state_shape = report.rollouts.front().state_shape;
  ds.n_traj = report.rollouts.size();
  ds.n_steps = len;
  for (const auto& r : report.rollouts) {
    ds.states.insert(ds.states.end(), r.predicted.begin(),
                     r.predicted.begin() + static_cast<std::ptrdiff_t>(len * r.state_size()));
  }
  ds.splits.assign(ds.n_traj, systems::Split::Test);
  ds.normalization.mean.assign(ds.channels(), 0.0);
  ds.normalization.std.assign(ds.channels(), 1.0);
  ds.extra = {{"kind", "rollout_export"}, {"label", report.label}};
  systems::save_dataset(ds, path);
}

}  // namespace mpstep::evaluation
