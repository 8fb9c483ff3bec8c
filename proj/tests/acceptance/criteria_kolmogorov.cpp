#include <cmath>

#include "acceptance/acceptance.hpp"
#include "acceptance/common.hpp"
#include "common/rng.hpp"
#include "surrogates/fno_lite.hpp"

namespace acceptance {

namespace {

using namespace mpstep;
namespace fs = std::filesystem;

constexpr std::uint64_t kSeed = 20241;

struct KolmogorovSetup {
  systems::TrajectoryDataset ds;
  fs::path dir;
};

// 64x64, Re = 1000; 10 trajectories of 200 states (one test trajectory).
KolmogorovSetup kolmogorov_setup(const Context& ctx) {
  const fs::path dir = ctx.work / "kolmogorov";
  auto ds = cached_dataset(dir / "dataset.mpds", systems::SystemSpec::kolmogorov2d(), 10, 200, derive_seed(kSeed, 1));
  return {std::move(ds), dir};
}

// Both surrogates share this size.
std::unique_ptr<surrogates::Surrogate> fresh_fno(const systems::TrajectoryDataset& ds) {
  return std::make_unique<surrogates::FnoLiteSurrogate>(
      surrogates::SpectralLayerConfig{8, 8, 3, surrogates::Activation::Gelu}, ds.state_shape, ds.normalization,
      derive_seed(kSeed, 2));
}

training::TrainConfig base_train_config(std::uint64_t stream) {
  training::TrainConfig cfg;
  cfg.seed = derive_seed(kSeed, stream);
  cfg.deterministic = true;
  cfg.batch_size = 16;
  cfg.window_stride = 1;
  return cfg;
}

std::unique_ptr<surrogates::Surrogate> pretrained(const KolmogorovSetup& s) {
  auto model = fresh_fno(s.ds);
  auto cfg = base_train_config(3);
  cfg.loss.mode = training::LossMode::OneStep;
  cfg.epochs = 30;
  cached_training(s.ds, *model, cfg, s.dir / "pretrain_one_step.mpck");
  return model;
}

constexpr std::size_t kFineTuneEpochs = 10;

// The vanilla surrogate continues one-step training for the same number of
// epochs the MP surrogate spends under the curriculum.
std::unique_ptr<surrogates::Surrogate> fine_tuned(const KolmogorovSetup& s, training::LossMode mode) {
  auto model = pretrained(s);
  auto cfg = base_train_config(4);
  cfg.epochs = kFineTuneEpochs;
  cfg.optimizer.lr = 1e-4;
  cfg.loss.mode = mode;
  if (mode == training::LossMode::Mp) {
    cfg.delta_optimizer.lr = 1e-1;
    training::CurriculumSchedule sched;
    sched.mu_init = 1e-5;
    sched.mu_growth = 10.0;
    sched.mu_update_every = 1;
    sched.mu_max = 1e4;
    sched.r_schedule = {{0, 1}, {1, 2}};
    sched.s_schedule = {{0, 1}, {2, 2}};
    cfg.curriculum = sched;
  }
  cached_training(s.ds, *model, cfg, s.dir / ("fine_tune_" + training::to_string(mode) + ".mpck"));
  return model;
}

struct Pair {
  evaluation::EvaluationReport mp;
  evaluation::EvaluationReport vanilla;
};

Pair evaluate_pair(const KolmogorovSetup& s, const evaluation::EvalConfig& ev) {
  const auto mp = fine_tuned(s, training::LossMode::Mp);
  const auto vanilla = fine_tuned(s, training::LossMode::OneStep);
  progress("evaluating " + std::to_string(ev.n_initial_conditions) + " rollouts of " + std::to_string(ev.horizon) +
           " states");
  return {evaluation::evaluate_model(*mp, s.ds, ev, "mp"), evaluation::evaluate_model(*vanilla, s.ds, ev, "vanilla")};
}

double mean_of(const std::vector<double>& v) {
  double sum = 0.0;
  for (double x : v) sum += x;
  return v.empty() ? std::nan("") : sum / static_cast<double>(v.size());
}

}  // namespace

Outcome spectrum_fidelity(const Context& ctx) {
  const auto s = kolmogorov_setup(ctx);
  evaluation::EvalConfig ev;
  ev.horizon = 101;
  ev.n_initial_conditions = 5;
  ev.ic_stride = 20;
  ev.spectrum_k_min = 1;
  ev.spectrum_k_max = 8;
  ev.spectrum_step = 100;
  ev.threads = 0;
  const auto pair = evaluate_pair(s, ev);
  if (!pair.mp.has_truth()) return {false, "test trajectory too short for a 100-step horizon"};
  const double e_mp = mean_of(pair.mp.spectrum_error);
  const double e_vanilla = mean_of(pair.vanilla.spectrum_error);
  // Blown-up rollouts carry an infinite error; also report the rollouts
  // that stay bounded under both surrogates.
  std::vector<double> both_mp, both_vanilla;
  for (std::size_t i = 0; i < pair.mp.spectrum_error.size(); ++i) {
    if (std::isfinite(pair.mp.spectrum_error[i]) && std::isfinite(pair.vanilla.spectrum_error[i])) {
      both_mp.push_back(pair.mp.spectrum_error[i]);
      both_vanilla.push_back(pair.vanilla.spectrum_error[i]);
    }
  }
  std::string detail = "mean relative spectrum error (k = 1..8, t = 100 steps, " +
                       std::to_string(pair.mp.rollouts.size()) + " rollouts): mp " + format("%.4f", e_mp) +
                       " < vanilla " + format("%.4f", e_vanilla) + ": " + (e_mp < e_vanilla ? "yes" : "no") +
                       "; blown up by t = 100: mp " + std::to_string(pair.mp.blow_up_count()) + ", vanilla " +
                       std::to_string(pair.vanilla.blow_up_count());
  if (!both_mp.empty()) {
    detail += "; over the " + std::to_string(both_mp.size()) + " rollouts bounded in both: mp " +
              format("%.4f", mean_of(both_mp)) + ", vanilla " + format("%.4f", mean_of(both_vanilla));
  }
  return {e_mp < e_vanilla, detail};
}

Outcome stability(const Context& ctx) {
  const auto s = kolmogorov_setup(ctx);
  evaluation::EvalConfig ev;
  ev.horizon = 501;
  ev.n_initial_conditions = 20;
  ev.ic_stride = 10;
  ev.threads = 0;
  const auto pair = evaluate_pair(s, ev);
  const double n = static_cast<double>(pair.mp.rollouts.size());
  const double rate_mp = static_cast<double>(pair.mp.blow_up_count()) / n;
  const double rate_vanilla = static_cast<double>(pair.vanilla.blow_up_count()) / n;
  const double first_vanilla = pair.vanilla.first_blow_up_time();
  // MP rollouts already blown up when the first vanilla rollout blows up.
  std::size_t mp_at_first = 0;
  if (!std::isnan(first_vanilla)) {
    for (const auto& r : pair.mp.rollouts) {
      if (r.blow_up_step && static_cast<double>(*r.blow_up_step) * r.dt_effective <= first_vanilla) ++mp_at_first;
    }
  }
  const bool pass = pair.mp.rollouts.size() == 20 && rate_mp <= rate_vanilla && mp_at_first == 0;
  std::string detail = "blow-up rate over " + std::to_string(pair.mp.rollouts.size()) +
                       " rollouts of 500 steps: mp " + format("%.2f", rate_mp) + " <= vanilla " +
                       format("%.2f", rate_vanilla);
  if (std::isnan(first_vanilla)) {
    detail += "; vanilla never blows up";
  } else {
    detail += "; vanilla first blows up at t = " + format("%.1f", first_vanilla) + ", mp blow-ups by then " +
              std::to_string(mp_at_first);
  }
  return {pass, detail};
}

}  // namespace acceptance
