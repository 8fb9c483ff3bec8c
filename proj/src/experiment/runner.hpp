#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "evaluation/evaluate.hpp"
#include "experiment/config.hpp"

namespace mpstep::experiment {

using Logger = std::function<void(const std::string&)>;

// Run directory layout.
struct RunPaths {
  std::filesystem::path root;

  std::filesystem::path config() const { return root / "config.resolved"; }
  std::filesystem::path dataset_ref() const { return root / "dataset.ref"; }
  std::filesystem::path dataset() const { return root / "dataset.mpds"; }
  std::filesystem::path checkpoint() const { return root / "checkpoints" / "latest.mpck"; }
  std::filesystem::path train_log() const { return root / "logs" / "train.csv"; }
  std::filesystem::path metrics() const { return root / "metrics"; }
};

struct GenerateOptions {
  std::optional<std::filesystem::path> out;  // dataset file; default <output_dir>/dataset.mpds
  bool force = false;
};

struct TrainOptions {
  std::optional<std::filesystem::path> dataset;  // default: <run>/dataset.ref, then <run>/dataset.mpds
  std::optional<std::filesystem::path> out;      // run directory; default output_dir
  std::optional<std::filesystem::path> resume;   // checkpoint to continue from
  bool force = false;
};

struct EvalOptions {
  std::optional<std::filesystem::path> checkpoint;  // default <run>/checkpoints/latest.mpck
  std::optional<std::filesystem::path> dataset;
  std::optional<std::filesystem::path> out;  // run directory; metrics go to <out>/metrics
  bool force = false;
};

struct CompareOptions {
  std::vector<std::filesystem::path> runs;
  std::optional<std::filesystem::path> out;  // directory for comparison.csv
  bool force = false;
};

std::filesystem::path cmd_generate(const ExperimentConfig& cfg, const GenerateOptions& opt, const Logger& log = {});
std::vector<training::EpochLog> cmd_train(const ExperimentConfig& cfg, const TrainOptions& opt,
                                          const Logger& log = {});
evaluation::EvaluationReport cmd_eval(const ExperimentConfig& cfg, const EvalOptions& opt, const Logger& log = {});
// `cfg` overrides the evaluation section of the runs when given.
evaluation::Comparison cmd_compare(const std::optional<ExperimentConfig>& cfg, const CompareOptions& opt,
                                   const Logger& log = {});

// Dataset named by a run directory (dataset.ref, falling back to dataset.mpds).
std::filesystem::path run_dataset(const RunPaths& run);

}  // namespace mpstep::experiment
