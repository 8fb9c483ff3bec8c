#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include <json.hpp>

#include "evaluation/evaluate.hpp"
#include "systems/system_spec.hpp"
#include "training/trainer.hpp"

namespace mpstep::experiment {

struct DatasetSection {
  std::size_t n_traj = 0;
  std::size_t n_steps = 0;
};

struct SurrogateSection {
  std::string architecture;
  nlohmann::json config;  // hyperparameters of the chosen architecture
};

// A fully resolved experiment. Every field except system.kind has a default;
// keys the defaults do not know are rejected.
struct ExperimentConfig {
  std::string name;
  std::uint64_t seed = 0;
  bool deterministic = false;
  std::filesystem::path output_dir;
  systems::SystemSpec system;
  DatasetSection dataset;
  SurrogateSection surrogate;
  training::TrainConfig training;
  evaluation::EvalConfig evaluation;

  // Stream seeds derived from the master seed.
  std::uint64_t dataset_seed() const;
  std::uint64_t init_seed() const;
  std::uint64_t shuffle_seed() const;

  // The resolved tree in the same layout as the input file.
  nlohmann::json to_tree() const;
  std::string to_yaml() const;
};

// Default tree for a system kind.
nlohmann::json default_tree(systems::SystemKind kind);

// Parses YAML text into a tree (typed scalars, sequences, maps).
nlohmann::json parse_yaml(const std::string& text);
std::string emit_yaml(const nlohmann::json& tree);

// Overlays `user` on the defaults of its system kind and validates the
// result. Throws ConfigError naming the offending key.
ExperimentConfig resolve_config(const nlohmann::json& user);
ExperimentConfig load_config(const std::filesystem::path& path);
ExperimentConfig config_from_yaml(const std::string& text);

}  // namespace mpstep::experiment
