#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "surrogates/checkpoint.hpp"
#include "surrogates/surrogate.hpp"
#include "systems/dataset.hpp"
#include "training/adam.hpp"
#include "training/config.hpp"
#include "training/curriculum.hpp"
#include "training/discontinuity_bank.hpp"
#include "training/losses.hpp"

namespace mpstep::training {

struct TrainConfig {
  LossConfig loss;
  MPConfig mp;  // used in mp mode; r, s, mu are overridden by the curriculum
  std::optional<CurriculumSchedule> curriculum;
  AdamConfig optimizer;
  AdamConfig delta_optimizer{1e-2, 0.9, 0.999, 1e-8, 0.0};
  std::size_t epochs = 50;
  std::size_t batch_size = 32;
  // Start offset between consecutive windows of a trajectory; 0 means the
  // window length minus one (windows share only their boundary state).
  std::size_t window_stride = 0;
  std::uint64_t seed = 0;
  bool deterministic = false;  // zeroes wall-clock fields in the log
  std::filesystem::path log_path;
  std::filesystem::path checkpoint_path;
  std::size_t checkpoint_every = 1;

  void validate() const;
  nlohmann::json to_json() const;
  static TrainConfig from_json(const nlohmann::json& j);
};

struct EpochLog {
  std::size_t epoch = 0;
  LossMode mode = LossMode::OneStep;
  std::size_t n_or_sr = 1;
  double mu = 0.0;
  std::size_t r = 1;
  std::size_t s = 1;
  double loss_total = 0.0;
  double loss_gt = 0.0;
  double loss_p = 0.0;
  double mean_delta_norm = 0.0;
  double grad_norm = 0.0;
  double lr = 0.0;
  double seconds = 0.0;

  static std::string csv_header();
  std::string csv_row() const;
};

struct WindowRef {
  std::size_t trajectory = 0;
  std::size_t start = 0;
};

// Windows of `length` consecutive states from the train-split trajectories.
std::vector<WindowRef> make_windows(const systems::TrajectoryDataset& ds, std::size_t length, std::size_t stride);

// Stacks the states of `refs` into a batched window of `length` states.
Window gather_window(const systems::TrajectoryDataset& ds, const std::vector<WindowRef>& refs, std::size_t length);

class Trainer {
 public:
  Trainer(const systems::TrajectoryDataset& dataset, surrogates::Surrogate& model, TrainConfig config);

  // Restores parameters, optimizer moments, bank and curriculum.
  void restore(const surrogates::Checkpoint& ckpt);
  surrogates::Checkpoint checkpoint() const;

  EpochLog run_epoch();
  // Runs the remaining epochs, writing the log and checkpoints as configured.
  std::vector<EpochLog> run(const std::function<void(const EpochLog&)>& on_epoch = {});

  std::size_t next_epoch() const { return epoch_; }
  const DiscontinuityBank& bank() const { return bank_; }
  const CurriculumState& curriculum() const { return curriculum_; }
  const MPConfig& current_mp() const { return mp_; }
  std::size_t window_length() const;
  std::size_t window_count() const { return windows_.size(); }

 private:
  void prepare_epoch();
  void rebuild_windows();
  void write_log_row(const EpochLog& row, bool truncate) const;

  const systems::TrajectoryDataset& dataset_;
  surrogates::Surrogate& model_;
  TrainConfig config_;
  Adam theta_opt_;
  Adam delta_opt_;
  DiscontinuityBank bank_;
  CurriculumState curriculum_;
  MPConfig mp_;
  std::vector<WindowRef> windows_;
  std::size_t epoch_ = 0;
  double last_gt_ = 0.0;
};

}  // namespace mpstep::training
