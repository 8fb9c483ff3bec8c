#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "common/error.hpp"
#include "experiment/config.hpp"
#include "experiment/runner.hpp"
#include "surrogates/checkpoint.hpp"
#include "surrogates/reference.hpp"

using namespace mpstep;
using namespace mpstep::experiment;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("mpstep_exp_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::vector<std::string>> read_csv(const fs::path& path) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(slurp(path));
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    rows.push_back(cells);
  }
  return rows;
}

ExperimentConfig small_lorenz(const fs::path& out, const std::string& extra = "") {
  const std::string text = "name: small\nseed: 5\ndeterministic: true\noutput_dir: " + out.string() +
                           "\nsystem: {kind: lorenz63}\n"
                           "dataset: {n_traj: 10, n_steps: 120}\n"
                           "surrogate: {mlp: {hidden: 16, layers: 2}}\n"
                           "training: {epochs: 10, batch_size: 16}\n"
                           "evaluation: {horizon: 40, n_initial_conditions: 3, ic_stride: 20, rmse_step: 5}\n" +
                           extra;
  return config_from_yaml(text);
}

}  // namespace

TEST_CASE("config: defaults fill every field and unknown keys are rejected") {
  const auto c = config_from_yaml("system:\n  kind: lorenz63\n");
  CHECK(c.system.kind == systems::SystemKind::Lorenz63);
  CHECK(c.surrogate.architecture == "mlp");
  CHECK(c.training.optimizer.lr == 1e-3);
  CHECK(c.training.curriculum.has_value());
  CHECK(c.training.curriculum->mu_init == 1e-5);

  const auto k = config_from_yaml("system: {kind: kolmogorov2d}\n");
  CHECK(k.surrogate.architecture == "fno_lite");
  CHECK(k.evaluation.spectrum_k_max == 8);

  CHECK_THROWS_WITH_AS(config_from_yaml("system: {kind: lorenz63}\noptimiser: {lr: 1}\n"),
                       doctest::Contains("optimiser"), ConfigError);
  CHECK_THROWS_WITH_AS(config_from_yaml("system: {kind: lorenz63}\nmp: {rr: 2}\n"), doctest::Contains("mp.rr"),
                       ConfigError);
  CHECK_THROWS_WITH_AS(config_from_yaml("dataset: {n_traj: 3}\n"), doctest::Contains("system.kind"), ConfigError);
  CHECK_THROWS_WITH_AS(config_from_yaml("system: {kind: lorenz63}\ntraining: {epochs: ten}\n"),
                       doctest::Contains("training.epochs"), ConfigError);
  CHECK_THROWS_WITH_AS(config_from_yaml("system: {kind: lorenz63}\ntraining: {epochs: -1}\n"),
                       doctest::Contains("training.epochs"), ConfigError);
  CHECK_THROWS_AS(config_from_yaml("system: {kind: lorenz63}\nloss: {mode: two_step}\n"), ConfigError);
  CHECK_THROWS_AS(config_from_yaml("system: {kind: lorenz63, parameters: {gamma: 1.0}}\n"), ConfigError);
  CHECK_THROWS_AS(config_from_yaml("system: [1, 2\n"), ConfigError);
}

TEST_CASE("config: resolved tree round-trips and seeds derive from the master seed") {
  const auto c = config_from_yaml(
      "name: rt\nseed: 11\nsystem: {kind: lorenz63, parameters: {rho: 30.5}}\n"
      "loss: {mode: mp}\ncurriculum: {r_schedule: [[0, 2], [5, 4]], s_schedule: [[3, 2]]}\n"
      "optimizer: {lr: 3.0e-4}\n");
  const auto again = config_from_yaml(c.to_yaml());
  CHECK(again.to_yaml() == c.to_yaml());
  CHECK(again.system.param("rho") == 30.5);
  CHECK(again.training.curriculum->r_schedule == c.training.curriculum->r_schedule);
  CHECK(again.training.optimizer.lr == 3.0e-4);
  CHECK(c.dataset_seed() != c.init_seed());
  CHECK(c.init_seed() != c.shuffle_seed());
  CHECK(c.training.seed == c.shuffle_seed());

  const auto no_curriculum = config_from_yaml("system: {kind: lorenz63}\ncurriculum: {enabled: false}\n");
  CHECK_FALSE(no_curriculum.training.curriculum.has_value());
  CHECK_FALSE(config_from_yaml(no_curriculum.to_yaml()).training.curriculum.has_value());

  const auto quoted = config_from_yaml("name: \"123\"\nsystem: {kind: lorenz63}\n");
  CHECK(quoted.name == "123");
  CHECK(config_from_yaml(quoted.to_yaml()).name == "123");
}

TEST_CASE("generate: byte-identical files, refusal without force, summary arithmetic") {
  const auto dir = scratch("generate");
  auto cfg = small_lorenz(dir);
  std::vector<std::string> lines;
  const auto path = cmd_generate(cfg, {dir / "a.mpds", false}, [&](const std::string& l) { lines.push_back(l); });
  cmd_generate(cfg, {dir / "b.mpds", false});
  CHECK(slurp(path) == slurp(dir / "b.mpds"));
  CHECK_THROWS_AS(cmd_generate(cfg, {dir / "a.mpds", false}), IoError);
  CHECK_NOTHROW(cmd_generate(cfg, {dir / "a.mpds", true}));

  const std::size_t raw = (cfg.dataset.n_steps - 1) * cfg.system.subsample_factor + 1;
  bool found = false;
  for (const auto& l : lines) {
    if (l.find("raw_steps=" + std::to_string(raw)) != std::string::npos &&
        l.find("n_steps=" + std::to_string((raw - 1) / cfg.system.subsample_factor + 1)) != std::string::npos) {
      found = true;
    }
  }
  CHECK(found);

  cfg.seed = 6;
  cmd_generate(cfg, {dir / "c.mpds", false});
  CHECK(slurp(path) != slurp(dir / "c.mpds"));
}

TEST_CASE("train: interrupted and resumed run matches an uninterrupted one") {
  const auto dir = scratch("resume");
  const std::string mp =
      "loss: {mode: mp}\ncurriculum: {mu_update_every: 2, r_schedule: [[0, 2]], s_schedule: [[0, 1], [4, 3]]}\n";
  auto full = small_lorenz(dir / "full", mp);
  cmd_generate(full, {dir / "data.mpds", false});
  cmd_train(full, {dir / "data.mpds", std::nullopt, std::nullopt, false});

  auto part = small_lorenz(dir / "part", mp);
  part.training.epochs = 7;
  cmd_train(part, {dir / "data.mpds", std::nullopt, std::nullopt, false});
  const auto interrupted = read_csv(RunPaths{dir / "part"}.train_log());
  CHECK(interrupted.size() == 7);

  auto rest = small_lorenz(dir / "part", mp);
  const auto rows =
      cmd_train(rest, {dir / "data.mpds", std::nullopt, RunPaths{dir / "part"}.checkpoint(), false});
  REQUIRE(rows.size() == 3);
  CHECK(rows.front().epoch == 7);
  CHECK(slurp(RunPaths{dir / "part"}.train_log()) == slurp(RunPaths{dir / "full"}.train_log()));

  // A second fresh run into an existing run directory is refused.
  CHECK_THROWS_AS(cmd_train(full, {dir / "data.mpds", std::nullopt, std::nullopt, false}), IoError);
}

TEST_CASE("train: shape mismatch fails before any epoch") {
  const auto dir = scratch("mismatch");
  auto cfg = small_lorenz(dir / "run");
  cmd_generate(cfg, {dir / "data.mpds", false});
  cfg.surrogate.architecture = "fno_lite";
  cfg.surrogate.config = {{"modes", 2}, {"width", 4}, {"layers", 1}, {"activation", "gelu"}};
  CHECK_THROWS_AS(cmd_train(cfg, {dir / "data.mpds", std::nullopt, std::nullopt, false}), ConfigError);
  CHECK_FALSE(fs::exists(RunPaths{dir / "run"}.train_log()));
}

TEST_CASE("eval: reference surrogate has zero error, per-IC curves average to the mean curve") {
  const auto dir = scratch("eval");
  auto cfg = small_lorenz(dir / "ref");
  cmd_generate(cfg, {dir / "data.mpds", false});
  const auto ds = systems::load_dataset(dir / "data.mpds");
  surrogates::ReferenceSurrogate ref(ds.spec, ds.normalization);
  fs::create_directories(dir / "ref" / "checkpoints");
  surrogates::save_checkpoint(surrogates::make_checkpoint(ref), RunPaths{dir / "ref"}.checkpoint());

  const auto report = cmd_eval(cfg, {std::nullopt, dir / "data.mpds", std::nullopt, false});
  for (double v : report.rmse.values) CHECK(v == 0.0);
  CHECK_THROWS_AS(cmd_eval(cfg, {std::nullopt, dir / "data.mpds", std::nullopt, false}), IoError);

  const auto metrics = RunPaths{dir / "ref"}.metrics();
  const auto summary = read_csv(metrics / "summary.csv");
  bool persistence = false;
  for (const auto& row : summary) persistence = persistence || row[0] == "persistence";
  CHECK(persistence);

  // Averaged persistence curve equals the mean of the per-IC curves.
  const auto per_ic = read_csv(metrics / "per_ic.csv");
  const auto mean = read_csv(metrics / "persistence_rmse.csv");
  std::map<std::size_t, std::pair<double, int>> sums;
  for (const auto& row : per_ic) {
    auto& s = sums[std::stoul(row[1])];
    s.first += std::stod(row[5]);
    s.second += 1;
  }
  REQUIRE(sums.size() == mean.size());
  for (const auto& row : mean) {
    const auto& s = sums.at(std::stoul(row[0]));
    CHECK(std::abs(s.first / s.second - std::stod(row[2])) <= 1e-12);
  }
}

TEST_CASE("compare: self comparison, labels, incompatible specs, single truncation warning") {
  const auto dir = scratch("compare");
  auto a = small_lorenz(dir / "a", "loss: {mode: one_step}\n");
  a.name = "alpha";
  a.training.epochs = 2;
  cmd_generate(a, {dir / "data.mpds", false});
  cmd_train(a, {dir / "data.mpds", std::nullopt, std::nullopt, false});

  const auto self = cmd_compare(std::nullopt, {{dir / "a", dir / "a"}, dir / "cmp", false});
  for (const auto& row : self.rows) {
    CHECK(row.label != "");
    if (row.label == "alpha" && !std::isnan(row.delta_vs_first)) CHECK(row.delta_vs_first == 0.0);
  }
  CHECK(self.rows.front().label == "alpha");
  CHECK(fs::exists(dir / "cmp" / "comparison.csv"));
  CHECK_THROWS_AS(cmd_compare(std::nullopt, {{dir / "a"}, dir / "cmp", false}), IoError);

  auto b = small_lorenz(dir / "b", "loss: {mode: one_step}\nevaluation: {horizon: 30}\n");
  b.name = "beta";
  b.training.epochs = 2;
  cmd_train(b, {dir / "data.mpds", std::nullopt, std::nullopt, false});
  std::vector<std::string> lines;
  const auto mixed = cmd_compare(std::nullopt, {{dir / "a", dir / "b", dir / "a"}, dir / "cmp2", false},
                                 [&](const std::string& l) { lines.push_back(l); });
  CHECK(mixed.warnings.size() == 1);
  int warnings = 0;
  for (const auto& l : lines) warnings += l.rfind("warning", 0) == 0;
  CHECK(warnings == 1);

  auto c = config_from_yaml("name: gamma\nsystem: {kind: lorenz63, parameters: {rho: 35}}\noutput_dir: " +
                            (dir / "c").string() +
                            "\ndataset: {n_traj: 10, n_steps: 120}\ntraining: {epochs: 1}\n"
                            "surrogate: {mlp: {hidden: 8}}\n");
  cmd_generate(c, {dir / "c.mpds", false});
  cmd_train(c, {dir / "c.mpds", std::nullopt, std::nullopt, false});
  CHECK_THROWS_AS(cmd_compare(std::nullopt, {{dir / "a", dir / "c"}, dir / "cmp3", false}), ConfigError);
}
