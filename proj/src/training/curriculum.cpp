#include "training/curriculum.hpp"

#include <algorithm>
#include <cmath>

namespace mpstep::training {

nlohmann::json CurriculumState::to_json() const {
  return {{"mu", mu},
          {"r", r},
          {"s", s},
          {"last_check_epoch", last_check_epoch},
          {"reference_loss", reference_loss},
          {"has_reference", has_reference}};
}

CurriculumState CurriculumState::from_json(const nlohmann::json& j) {
  CurriculumState c;
  c.mu = j.at("mu").get<double>();
  c.r = j.at("r").get<std::size_t>();
  c.s = j.at("s").get<std::size_t>();
  c.last_check_epoch = j.at("last_check_epoch").get<std::size_t>();
  c.reference_loss = j.at("reference_loss").get<double>();
  c.has_reference = j.at("has_reference").get<bool>();
  return c;
}

CurriculumState initial_curriculum(const CurriculumSchedule& schedule) {
  CurriculumState c;
  c.mu = std::min(schedule.mu_init, schedule.mu_max);
  c.r = milestone_value(schedule.r_schedule, 0);
  c.s = milestone_value(schedule.s_schedule, 0);
  return c;
}

std::size_t milestone_value(const Milestones& m, std::size_t epoch) {
  std::size_t value = 1;
  for (const auto& [at, v] : m) {
    if (at <= epoch) value = v;
  }
  return value;
}

double interval_mu(const CurriculumSchedule& schedule, std::size_t epoch) {
  const auto exponent = static_cast<double>(epoch / schedule.mu_update_every);
  return std::min(schedule.mu_init * std::pow(schedule.mu_growth, exponent), schedule.mu_max);
}

MPConfig curriculum_step(const CurriculumSchedule& schedule, std::size_t epoch, CurriculumState& state,
                         DiscontinuityBank& bank, const MPConfig& base, double last_gt) {
  if (schedule.trigger == MuTrigger::Interval) {
    state.mu = interval_mu(schedule, epoch);
  } else if (epoch > 0) {
    if (!state.has_reference) {
      state.reference_loss = last_gt;
      state.has_reference = true;
      state.last_check_epoch = epoch - 1;
    } else if (epoch - state.last_check_epoch >= schedule.mu_update_every) {
      const double improvement = (state.reference_loss - last_gt) / std::max(std::abs(state.reference_loss), 1e-300);
      if (improvement < schedule.plateau_tolerance) state.mu = std::min(state.mu * schedule.mu_growth, schedule.mu_max);
      state.reference_loss = last_gt;
      state.last_check_epoch = epoch;
    }
  }
  const std::size_t r = milestone_value(schedule.r_schedule, epoch);
  const std::size_t s = milestone_value(schedule.s_schedule, epoch);
  if (r != state.r || s != state.s) {
    bank.reset();
    state.r = r;
    state.s = s;
  }
  MPConfig out = base;
  out.mu = state.mu;
  out.r = state.r;
  out.s = state.s;
  return out;
}

}  // namespace mpstep::training
