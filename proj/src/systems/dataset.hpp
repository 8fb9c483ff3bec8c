#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include <json.hpp>

#include "systems/system_spec.hpp"

namespace mpstep::systems {

enum class Split { Train, Validation, Test };
std::string to_string(Split s);

// Per-channel statistics. Channels are the leading axis of the state shape
// (the three Lorenz components, or the field channels of a grid state).
struct Normalization {
  std::vector<double> mean;
  std::vector<double> std;

  void normalize(std::span<double> state) const;
  void denormalize(std::span<double> state) const;
};

// Ground-truth trajectories [n_traj x n_steps x state...], stored raw.
struct TrajectoryDataset {
  SystemSpec spec;
  std::size_t n_traj = 0;
  std::size_t n_steps = 0;
  ad::Shape state_shape;
  std::vector<double> states;
  Normalization normalization;
  std::vector<Split> splits;
  std::uint64_t seed = 0;
  // Free-form metadata carried through save/load.
  nlohmann::json extra = nlohmann::json::object();

  double dt_effective() const { return spec.dt_effective(); }
  std::size_t state_size() const { return ad::numel(state_shape); }
  std::size_t channels() const { return state_shape.empty() ? 1 : state_shape[0]; }
  std::span<const double> trajectory(std::size_t traj) const;
  std::span<const double> state(std::size_t traj, std::size_t step) const;
  std::vector<std::size_t> trajectories(Split split) const;

  // Throws FormatError when an invariant does not hold.
  void validate() const;
};

// Statistics over the train-split trajectories only.
Normalization compute_normalization(const TrajectoryDataset& ds);

// 80/10/10 split by trajectory index.
std::vector<Split> default_splits(std::size_t n_traj);

// Integrates spin-up, discards it, then records every subsample_factor-th
// state until n_steps states are stored. Pure function of its arguments.
// `parallel` distributes trajectories over threads without changing results.
TrajectoryDataset generate_dataset(const SystemSpec& spec, std::size_t n_traj, std::size_t n_steps,
                                   std::uint64_t seed, bool parallel = false);

// Container magic "MPDS", version 1.
void save_dataset(const TrajectoryDataset& ds, const std::filesystem::path& path);
TrajectoryDataset load_dataset(const std::filesystem::path& path);

std::uint32_t dataset_checksum(const TrajectoryDataset& ds);

}  // namespace mpstep::systems
