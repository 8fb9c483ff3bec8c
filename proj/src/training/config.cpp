#include "training/config.hpp"

#include <cmath>

#include "common/error.hpp"

namespace mpstep::training {

namespace {

template <class E>
E from_table(const std::string& s, std::initializer_list<std::pair<const char*, E>> table, const char* what) {
  std::string names;
  for (const auto& [name, value] : table) {
    if (s == name) return value;
    names += names.empty() ? name : std::string(", ") + name;
  }
  throw ConfigError(std::string("unknown ") + what + " '" + s + "' (expected " + names + ")");
}

void check_milestones(const Milestones& m, const char* what) {
  for (std::size_t i = 0; i < m.size(); ++i) {
    if (m[i].second < 1) throw ConfigError(std::string(what) + " values must be >= 1");
    if (i > 0 && m[i].first <= m[i - 1].first) {
      throw ConfigError(std::string(what) + " milestone epochs must be strictly increasing");
    }
  }
}

std::size_t max_value(const Milestones& m) {
  std::size_t v = 1;
  for (const auto& [epoch, value] : m) v = std::max(v, value);
  return v;
}

Milestones milestones_from(const nlohmann::json& j) {
  Milestones m;
  for (const auto& e : j) m.emplace_back(e.at(0).get<std::size_t>(), e.at(1).get<std::size_t>());
  return m;
}

nlohmann::json milestones_json(const Milestones& m) {
  auto j = nlohmann::json::array();
  for (const auto& [epoch, value] : m) j.push_back({epoch, value});
  return j;
}

}  // namespace

std::string to_string(LossMode m) {
  switch (m) {
    case LossMode::OneStep: return "one_step";
    case LossMode::MultiRollout: return "multi_rollout";
    case LossMode::Mp: return "mp";
  }
  return "?";
}

std::string to_string(LossNorm n) { return n == LossNorm::Mse ? "mse" : "sum_sq"; }

std::string to_string(PenaltyNorm n) {
  switch (n) {
    case PenaltyNorm::L2Sq: return "l2_sq";
    case PenaltyNorm::L2: return "l2";
    case PenaltyNorm::L1: return "l1";
  }
  return "?";
}

std::string to_string(MuTrigger t) { return t == MuTrigger::Interval ? "interval" : "plateau"; }

LossMode loss_mode_from_string(const std::string& s) {
  return from_table<LossMode>(
      s, {{"one_step", LossMode::OneStep}, {"multi_rollout", LossMode::MultiRollout}, {"mp", LossMode::Mp}},
      "loss mode");
}

LossNorm loss_norm_from_string(const std::string& s) {
  return from_table<LossNorm>(s, {{"mse", LossNorm::Mse}, {"sum_sq", LossNorm::SumSq}}, "loss norm");
}

PenaltyNorm penalty_norm_from_string(const std::string& s) {
  return from_table<PenaltyNorm>(
      s, {{"l2_sq", PenaltyNorm::L2Sq}, {"l2", PenaltyNorm::L2}, {"l1", PenaltyNorm::L1}}, "penalty norm");
}

MuTrigger mu_trigger_from_string(const std::string& s) {
  return from_table<MuTrigger>(s, {{"interval", MuTrigger::Interval}, {"plateau", MuTrigger::Plateau}},
                               "mu trigger");
}

double LossConfig::lambda(std::size_t t) const {
  return std::pow(lambda_decay, static_cast<double>(t) - 1.0);
}

void LossConfig::validate() const {
  if (n_rollouts < 1) throw ConfigError("n_rollouts must be >= 1");
  if (!(lambda_decay > 0.0 && lambda_decay <= 1.0)) throw ConfigError("lambda_decay must be in (0, 1]");
}

nlohmann::json LossConfig::to_json() const {
  return {{"mode", to_string(mode)},
          {"n_rollouts", n_rollouts},
          {"lambda_decay", lambda_decay},
          {"pushforward", pushforward},
          {"norm", to_string(norm)}};
}

LossConfig LossConfig::from_json(const nlohmann::json& j) {
  LossConfig c;
  c.mode = loss_mode_from_string(j.at("mode").get<std::string>());
  c.n_rollouts = j.at("n_rollouts").get<std::size_t>();
  c.lambda_decay = j.at("lambda_decay").get<double>();
  c.pushforward = j.at("pushforward").get<bool>();
  c.norm = loss_norm_from_string(j.at("norm").get<std::string>());
  c.validate();
  return c;
}

void MPConfig::validate() const {
  if (r < 1 || s < 1) throw ConfigError("mp r and s must be >= 1");
  if (!(mu > 0.0) || !std::isfinite(mu)) throw ConfigError("mp mu must be a positive finite number");
}

nlohmann::json MPConfig::to_json() const {
  return {{"r", r}, {"s", s}, {"mu", mu}, {"penalty_norm", to_string(penalty_norm)}};
}

MPConfig MPConfig::from_json(const nlohmann::json& j) {
  MPConfig c;
  c.r = j.at("r").get<std::size_t>();
  c.s = j.at("s").get<std::size_t>();
  c.mu = j.at("mu").get<double>();
  c.penalty_norm = penalty_norm_from_string(j.at("penalty_norm").get<std::string>());
  c.validate();
  return c;
}

void CurriculumSchedule::validate() const {
  if (!(mu_init > 0.0)) throw ConfigError("curriculum mu_init must be > 0");
  if (!(mu_growth > 1.0)) throw ConfigError("curriculum mu_growth must be > 1");
  if (mu_update_every < 1) throw ConfigError("curriculum mu_update_every must be >= 1");
  if (!(mu_max >= mu_init)) throw ConfigError("curriculum mu_max must be >= mu_init");
  if (!(plateau_tolerance >= 0.0)) throw ConfigError("curriculum plateau_tolerance must be >= 0");
  check_milestones(r_schedule, "r_schedule");
  check_milestones(s_schedule, "s_schedule");
}

std::size_t CurriculumSchedule::max_r() const { return max_value(r_schedule); }
std::size_t CurriculumSchedule::max_s() const { return max_value(s_schedule); }

nlohmann::json CurriculumSchedule::to_json() const {
  return {{"mu_init", mu_init},
          {"mu_growth", mu_growth},
          {"mu_update_every", mu_update_every},
          {"mu_max", mu_max},
          {"trigger", to_string(trigger)},
          {"plateau_tolerance", plateau_tolerance},
          {"r_schedule", milestones_json(r_schedule)},
          {"s_schedule", milestones_json(s_schedule)}};
}

CurriculumSchedule CurriculumSchedule::from_json(const nlohmann::json& j) {
  CurriculumSchedule c;
  c.mu_init = j.at("mu_init").get<double>();
  c.mu_growth = j.at("mu_growth").get<double>();
  c.mu_update_every = j.at("mu_update_every").get<std::size_t>();
  c.mu_max = j.at("mu_max").get<double>();
  c.trigger = mu_trigger_from_string(j.at("trigger").get<std::string>());
  c.plateau_tolerance = j.at("plateau_tolerance").get<double>();
  c.r_schedule = milestones_from(j.at("r_schedule"));
  c.s_schedule = milestones_from(j.at("s_schedule"));
  c.validate();
  return c;
}

void AdamConfig::validate() const {
  if (!(lr > 0.0)) throw ConfigError("optimizer lr must be > 0");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
    throw ConfigError("optimizer betas must be in [0, 1)");
  }
  if (!(eps > 0.0)) throw ConfigError("optimizer eps must be > 0");
}

nlohmann::json AdamConfig::to_json() const {
  return {{"lr", lr}, {"beta1", beta1}, {"beta2", beta2}, {"eps", eps}, {"clip", clip}};
}

AdamConfig AdamConfig::from_json(const nlohmann::json& j) {
  AdamConfig c;
  c.lr = j.at("lr").get<double>();
  c.beta1 = j.at("beta1").get<double>();
  c.beta2 = j.at("beta2").get<double>();
  c.eps = j.at("eps").get<double>();
  c.clip = j.at("clip").get<double>();
  c.validate();
  return c;
}

}  // namespace mpstep::training
