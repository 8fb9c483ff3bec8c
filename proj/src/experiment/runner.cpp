#include "experiment/runner.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "common/error.hpp"
#include "surrogates/checkpoint.hpp"
#include "systems/dataset.hpp"
#include "training/trainer.hpp"

namespace mpstep::experiment {

namespace fs = std::filesystem;

namespace {

void say(const Logger& log, const std::string& line) {
  if (log) log(line);
}

std::string format(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

void refuse_existing(const fs::path& path, bool force) {
  if (!force && fs::exists(path)) {
    throw IoError(path.string() + " already exists (use --force to overwrite)");
  }
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path run_root(const ExperimentConfig& cfg, const std::optional<fs::path>& out) {
  return out ? *out : cfg.output_dir;
}

void write_dataset_ref(const RunPaths& run, const fs::path& dataset, std::uint32_t checksum) {
  const nlohmann::json ref = {{"path", fs::absolute(dataset).lexically_normal().string()}, {"checksum", checksum}};
  write_text(run.dataset_ref(), ref.dump(2) + "\n");
}

systems::TrajectoryDataset load_checked(const fs::path& path, const Logger& log) {
  auto ds = systems::load_dataset(path);
  say(log, "dataset " + path.string() + ": " + std::to_string(ds.n_traj) + " trajectories x " +
               std::to_string(ds.n_steps) + " states of shape " + ad::to_string(ds.state_shape));
  return ds;
}

void check_compatible(const surrogates::Checkpoint& ckpt, const systems::TrajectoryDataset& ds) {
  if (ckpt.state_shape != ds.state_shape) {
    throw ConfigError("checkpoint state shape " + ad::to_string(ckpt.state_shape) + " does not match dataset " +
                      ad::to_string(ds.state_shape));
  }
}

std::string summary_line(const evaluation::EvaluationReport& r, const evaluation::Comparison& table) {
  std::string line = r.label + ": " + std::to_string(r.rollouts.size()) + " rollouts, " +
                     std::to_string(r.blow_up_count()) + " blow-ups";
  if (r.has_truth()) line += ", median VPT " + format("%.4g", table.value(r.label, "vpt_median"));
  return line;
}

}  // namespace

fs::path run_dataset(const RunPaths& run) {
  if (fs::exists(run.dataset_ref())) {
    try {
      const auto ref = nlohmann::json::parse(read_text(run.dataset_ref()));
      return fs::path(ref.at("path").get<std::string>());
    } catch (const nlohmann::json::exception& e) {
      throw FormatError("malformed " + run.dataset_ref().string() + ": " + e.what());
    }
  }
  return run.dataset();
}

fs::path cmd_generate(const ExperimentConfig& cfg, const GenerateOptions& opt, const Logger& log) {
  const fs::path path = opt.out ? *opt.out : RunPaths{cfg.output_dir}.dataset();
  refuse_existing(path, opt.force);
  const auto ds = systems::generate_dataset(cfg.system, cfg.dataset.n_traj, cfg.dataset.n_steps, cfg.dataset_seed(),
                                            !cfg.deterministic);
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  systems::save_dataset(ds, path);

  const std::size_t raw = (ds.n_steps - 1) * cfg.system.subsample_factor + 1;
  say(log, "wrote " + path.string());
  say(log, "kind=" + systems::to_string(cfg.system.kind) + " n_traj=" + std::to_string(ds.n_traj) +
               " raw_steps=" + std::to_string(raw) + " subsample_factor=" + std::to_string(cfg.system.subsample_factor) +
               " n_steps=" + std::to_string(ds.n_steps) + " state_shape=" + ad::to_string(ds.state_shape) +
               " dt_effective=" + format("%.6g", ds.dt_effective()));
  say(log, "splits train=" + std::to_string(ds.trajectories(systems::Split::Train).size()) +
               " validation=" + std::to_string(ds.trajectories(systems::Split::Validation).size()) +
               " test=" + std::to_string(ds.trajectories(systems::Split::Test).size()));
  return path;
}

std::vector<training::EpochLog> cmd_train(const ExperimentConfig& cfg, const TrainOptions& opt, const Logger& log) {
  const RunPaths run{run_root(cfg, opt.out)};
  if (!opt.resume) {
    refuse_existing(run.checkpoint(), opt.force);
    refuse_existing(run.train_log(), opt.force);
  }
  const fs::path dataset_path = opt.dataset ? *opt.dataset : run_dataset(run);
  const auto ds = load_checked(dataset_path, log);

  auto model = surrogates::build_surrogate(cfg.surrogate.architecture, cfg.surrogate.config, ds.state_shape,
                                           ds.normalization, cfg.init_seed());
  auto tc = cfg.training;
  tc.log_path = run.train_log();
  tc.checkpoint_path = run.checkpoint();
  training::Trainer trainer(ds, *model, tc);
  if (opt.resume) {
    const auto ckpt = surrogates::load_checkpoint(*opt.resume, cfg.surrogate.architecture);
    check_compatible(ckpt, ds);
    trainer.restore(ckpt);
    say(log, "resuming at epoch " + std::to_string(trainer.next_epoch()) + " from " + opt.resume->string());
  }

  fs::create_directories(run.root / "checkpoints");
  fs::create_directories(run.root / "logs");
  write_text(run.config(), cfg.to_yaml());
  write_dataset_ref(run, dataset_path, systems::dataset_checksum(ds));

  say(log, "training " + cfg.surrogate.architecture + " (" + std::to_string(model->parameter_count()) +
               " parameters) with loss " + training::to_string(tc.loss.mode) + " on " +
               std::to_string(trainer.window_count()) + " windows");
  return trainer.run([&](const training::EpochLog& row) {
    say(log, "epoch " + std::to_string(row.epoch) + " loss " + format("%.6e", row.loss_total) + " gt " +
                 format("%.6e", row.loss_gt) + " mu " + format("%.3g", row.mu) + " r=" + std::to_string(row.r) +
                 " s=" + std::to_string(row.s));
  });
}

evaluation::EvaluationReport cmd_eval(const ExperimentConfig& cfg, const EvalOptions& opt, const Logger& log) {
  const RunPaths run{run_root(cfg, opt.out)};
  refuse_existing(run.metrics(), opt.force);
  const fs::path ckpt_path = opt.checkpoint ? *opt.checkpoint : run.checkpoint();
  const fs::path dataset_path = opt.dataset ? *opt.dataset : run_dataset(run);
  const auto ds = load_checked(dataset_path, log);
  const auto ckpt = surrogates::load_checkpoint(ckpt_path);
  check_compatible(ckpt, ds);
  const auto model = surrogates::restore_surrogate(ckpt);

  const auto report = evaluation::evaluate_model(*model, ds, cfg.evaluation, cfg.name);
  fs::create_directories(run.metrics());
  evaluation::write_report(report, ds, cfg.evaluation, run.metrics());
  say(log, summary_line(report, evaluation::compare_runs({report}, cfg.evaluation)));
  say(log, "metrics written to " + run.metrics().string());
  return report;
}

evaluation::Comparison cmd_compare(const std::optional<ExperimentConfig>& cfg, const CompareOptions& opt,
                                   const Logger& log) {
  if (opt.runs.empty()) throw ConfigError("compare needs at least one run directory");
  std::vector<ExperimentConfig> configs;
  for (const auto& dir : opt.runs) {
    const RunPaths run{dir};
    if (!fs::exists(run.config())) throw IoError("no config.resolved in run directory " + dir.string());
    configs.push_back(load_config(run.config()));
  }
  const auto spec = configs.front().system.to_json();
  for (std::size_t i = 1; i < configs.size(); ++i) {
    if (configs[i].system.to_json() != spec) {
      throw ConfigError("run " + opt.runs[i].string() + " uses a different system spec than " +
                        opt.runs.front().string());
    }
  }

  const fs::path out_dir = opt.out ? *opt.out : cfg ? cfg->output_dir : fs::path("comparison");
  const fs::path out_path = out_dir / "comparison.csv";
  refuse_existing(out_path, opt.force);

  const auto base_eval = cfg ? cfg->evaluation : configs.front().evaluation;
  const auto ds = load_checked(run_dataset(RunPaths{opt.runs.front()}), log);
  std::vector<evaluation::EvaluationReport> reports;
  for (std::size_t i = 0; i < opt.runs.size(); ++i) {
    auto ev = base_eval;
    if (!cfg) ev.horizon = configs[i].evaluation.horizon;
    const auto ckpt = surrogates::load_checkpoint(RunPaths{opt.runs[i]}.checkpoint());
    check_compatible(ckpt, ds);
    const auto model = surrogates::restore_surrogate(ckpt);
    reports.push_back(evaluation::evaluate_model(*model, ds, ev, configs[i].name));
  }
  const auto table = evaluation::compare_runs(reports, base_eval);
  for (const auto& w : table.warnings) say(log, "warning: " + w);
  fs::create_directories(out_dir);
  evaluation::write_comparison_csv(table, out_path);
  for (const auto& r : reports) say(log, summary_line(r, table));
  say(log, "comparison written to " + out_path.string());
  return table;
}

}  // namespace mpstep::experiment
