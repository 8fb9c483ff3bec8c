#pragma once

#include <json.hpp>

#include "training/config.hpp"
#include "training/discontinuity_bank.hpp"

namespace mpstep::training {

struct CurriculumState {
  double mu = 0.0;
  std::size_t r = 1;
  std::size_t s = 1;
  // Plateau trigger: mu grows when L_GT improved by less than the tolerance
  // since the last check, which happens every mu_update_every epochs.
  std::size_t last_check_epoch = 0;
  double reference_loss = 0.0;
  bool has_reference = false;

  nlohmann::json to_json() const;
  static CurriculumState from_json(const nlohmann::json& j);
};

CurriculumState initial_curriculum(const CurriculumSchedule& schedule);

// Milestone value in effect at `epoch` (1 before the first milestone).
std::size_t milestone_value(const Milestones& m, std::size_t epoch);

// mu for the interval trigger: mu_init * growth^floor(epoch / update_every),
// capped at mu_max.
double interval_mu(const CurriculumSchedule& schedule, std::size_t epoch);

// Called at the start of every epoch (0-based). `last_gt` is the mean L_GT
// of the previous epoch (ignored at epoch 0 and by the interval trigger).
// Resets `bank` when r or s change. Returns the MPConfig for the epoch.
MPConfig curriculum_step(const CurriculumSchedule& schedule, std::size_t epoch, CurriculumState& state,
                         DiscontinuityBank& bank, const MPConfig& base, double last_gt = 0.0);

}  // namespace mpstep::training
