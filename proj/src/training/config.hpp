#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

namespace mpstep::training {

enum class LossMode { OneStep, MultiRollout, Mp };
enum class LossNorm { Mse, SumSq };
enum class PenaltyNorm { L2Sq, L2, L1 };
enum class MuTrigger { Interval, Plateau };

std::string to_string(LossMode m);
std::string to_string(LossNorm n);
std::string to_string(PenaltyNorm n);
std::string to_string(MuTrigger t);
LossMode loss_mode_from_string(const std::string& s);
LossNorm loss_norm_from_string(const std::string& s);
PenaltyNorm penalty_norm_from_string(const std::string& s);
MuTrigger mu_trigger_from_string(const std::string& s);

struct LossConfig {
  LossMode mode = LossMode::OneStep;
  std::size_t n_rollouts = 1;
  double lambda_decay = 1.0;  // lambda(t) = decay^(t-1)
  bool pushforward = false;
  LossNorm norm = LossNorm::Mse;

  double lambda(std::size_t t) const;
  void validate() const;
  nlohmann::json to_json() const;
  static LossConfig from_json(const nlohmann::json& j);
};

struct MPConfig {
  std::size_t r = 1;
  std::size_t s = 1;
  double mu = 1e-5;
  PenaltyNorm penalty_norm = PenaltyNorm::L2Sq;

  std::size_t window_steps() const { return r * s; }
  void validate() const;
  nlohmann::json to_json() const;
  static MPConfig from_json(const nlohmann::json& j);
};

using Milestones = std::vector<std::pair<std::size_t, std::size_t>>;  // (epoch, value)

struct CurriculumSchedule {
  double mu_init = 1e-5;
  double mu_growth = 10.0;
  std::size_t mu_update_every = 5;
  double mu_max = 1.0;
  MuTrigger trigger = MuTrigger::Interval;
  double plateau_tolerance = 0.01;
  Milestones r_schedule;
  Milestones s_schedule;

  void validate() const;
  // Largest r and s reachable over the schedule.
  std::size_t max_r() const;
  std::size_t max_s() const;
  nlohmann::json to_json() const;
  static CurriculumSchedule from_json(const nlohmann::json& j);
};

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double clip = 1.0;  // global-norm threshold, <= 0 disables

  void validate() const;
  nlohmann::json to_json() const;
  static AdamConfig from_json(const nlohmann::json& j);
};

}  // namespace mpstep::training
