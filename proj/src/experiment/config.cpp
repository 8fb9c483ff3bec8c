#include "experiment/config.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <yaml-cpp/yaml.h>

#include "common/error.hpp"
#include "common/rng.hpp"

namespace mpstep::experiment {

namespace {

using nlohmann::json;

json scalar_from_yaml(const YAML::Node& node) {
  const std::string& s = node.Scalar();
  if (node.Tag() == "!") return s;  // quoted
  if (s == "~" || s == "null" || s.empty()) return nullptr;
  if (s == ".nan" || s == ".NaN") return std::numeric_limits<double>::quiet_NaN();
  if (s == ".inf" || s == "-.inf") return (s[0] == '-' ? -1.0 : 1.0) * std::numeric_limits<double>::infinity();
  if (s == "true" || s == "True") return true;
  if (s == "false" || s == "False") return false;
  try {
    std::size_t used = 0;
    if (s.find_first_of(".eE") == std::string::npos && s.find("inf") == std::string::npos) {
      if (s[0] == '-') {
        const long long v = std::stoll(s, &used);
        if (used == s.size()) return v;
      } else {
        const unsigned long long v = std::stoull(s, &used);
        if (used == s.size()) return v;
      }
    }
    const double d = std::stod(s, &used);
    if (used == s.size()) return d;
  } catch (const std::exception&) {
  }
  return s;
}

json from_yaml(const YAML::Node& node) {
  switch (node.Type()) {
    case YAML::NodeType::Null:
    case YAML::NodeType::Undefined: return nullptr;
    case YAML::NodeType::Scalar: return scalar_from_yaml(node);
    case YAML::NodeType::Sequence: {
      json out = json::array();
      for (const auto& item : node) out.push_back(from_yaml(item));
      return out;
    }
    case YAML::NodeType::Map: {
      json out = json::object();
      for (const auto& kv : node) out[kv.first.as<std::string>()] = from_yaml(kv.second);
      return out;
    }
  }
  return nullptr;
}

void emit(YAML::Emitter& out, const json& j) {
  if (j.is_object()) {
    out << YAML::BeginMap;
    for (const auto& [key, value] : j.items()) {
      out << YAML::Key << key << YAML::Value;
      emit(out, value);
    }
    out << YAML::EndMap;
  } else if (j.is_array()) {
    out << YAML::Flow << YAML::BeginSeq;
    for (const auto& v : j) emit(out, v);
    out << YAML::EndSeq;
  } else if (j.is_null()) {
    out << YAML::Null;
  } else if (j.is_boolean()) {
    out << j.get<bool>();
  } else if (j.is_number_unsigned()) {
    out << j.get<std::uint64_t>();
  } else if (j.is_number_integer()) {
    out << j.get<std::int64_t>();
  } else if (j.is_number_float()) {
    const double v = j.get<double>();
    if (std::isnan(v)) {
      out << ".nan";
    } else if (std::isinf(v)) {
      out << (v > 0 ? ".inf" : "-.inf");
    } else {
      std::array<char, 32> buf{};
      const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
      std::string text(buf.data(), res.ptr);
      if (text.find_first_of(".en") == std::string::npos) text += ".0";
      out << text;
    }
  } else {
    const auto& text = j.get_ref<const std::string&>();
    YAML::Node probe(text);
    if (scalar_from_yaml(probe).is_string() && !text.empty()) {
      out << text;
    } else {
      out << YAML::DoubleQuoted << text;
    }
  }
}

std::string type_name(const json& j) {
  if (j.is_null()) return "null";
  if (j.is_boolean()) return "boolean";
  if (j.is_number()) return "number";
  if (j.is_string()) return "string";
  if (j.is_array()) return "list";
  return "section";
}

// Overlays `user` onto `base`; `base` decides which keys exist and their types.
void overlay(json& base, const json& user, const std::string& path) {
  if (!user.is_object()) throw ConfigError("'" + (path.empty() ? "<root>" : path) + "' must be a section");
  for (const auto& [key, value] : user.items()) {
    const std::string where = path.empty() ? key : path + "." + key;
    if (!base.contains(key)) throw ConfigError("unknown config key '" + where + "'");
    json& slot = base[key];
    if (slot.is_object()) {
      overlay(slot, value, where);
    } else if (slot.is_null()) {
      if (!value.is_null() && !value.is_string()) throw ConfigError("'" + where + "' must be a string or null");
      slot = value;
    } else if (slot.is_number()) {
      if (!value.is_number()) throw ConfigError("'" + where + "' must be a number, got " + type_name(value));
      if (slot.is_number_unsigned() && !value.is_number_unsigned()) {
        throw ConfigError("'" + where + "' must be a non-negative integer");
      }
      slot = value;
    } else if (slot.type() != value.type()) {
      throw ConfigError("'" + where + "' must be a " + type_name(slot) + ", got " + type_name(value));
    } else {
      slot = value;
    }
  }
}

double number(const json& j) { return j.get<double>(); }

training::Milestones milestones(const json& j, const std::string& where) {
  training::Milestones m;
  for (const auto& e : j) {
    if (!e.is_array() || e.size() != 2 || !e[0].is_number_unsigned() || !e[1].is_number_unsigned()) {
      throw ConfigError("'" + where + "' entries must be [epoch, value] pairs of non-negative integers");
    }
    m.emplace_back(e[0].get<std::size_t>(), e[1].get<std::size_t>());
  }
  return m;
}

training::AdamConfig adam_from(const json& j) {
  return {number(j["lr"]), number(j["beta1"]), number(j["beta2"]), number(j["eps"]), number(j["clip"])};
}

}  // namespace

std::uint64_t ExperimentConfig::dataset_seed() const { return derive_seed(seed, 1); }
std::uint64_t ExperimentConfig::init_seed() const { return derive_seed(seed, 2); }
std::uint64_t ExperimentConfig::shuffle_seed() const { return derive_seed(seed, 3); }

json default_tree(systems::SystemKind kind) {
  const bool lorenz = kind == systems::SystemKind::Lorenz63;
  const auto spec = lorenz ? systems::SystemSpec::lorenz63() : systems::SystemSpec::kolmogorov2d();
  json system = spec.to_json();
  json tree = {
      {"name", lorenz ? "lorenz63" : "kolmogorov2d"},
      {"seed", 0u},
      {"deterministic", false},
      {"output_dir", nullptr},
      {"system", system},
      {"dataset", {{"n_traj", lorenz ? 50u : 10u}, {"n_steps", lorenz ? 2100u : 301u}}},
      {"surrogate",
       {{"architecture", lorenz ? "mlp" : "fno_lite"},
        {"mlp", {{"hidden", 128u}, {"layers", 3u}, {"activation", "tanh"}}},
        {"fno_lite", {{"modes", 12u}, {"width", 16u}, {"layers", 4u}, {"activation", "gelu"}}}}},
      {"loss",
       {{"mode", "one_step"}, {"n_rollouts", 1u}, {"lambda_decay", 1.0}, {"pushforward", false}, {"norm", "mse"}}},
      {"mp", {{"r", 1u}, {"s", 1u}, {"mu", 1e-5}, {"penalty_norm", "l2_sq"}}},
      {"curriculum",
       {{"enabled", true},
        {"mu_init", 1e-5},
        {"mu_growth", 10.0},
        {"mu_update_every", 5u},
        {"mu_max", 1.0},
        {"trigger", "interval"},
        {"plateau_tolerance", 0.01},
        {"r_schedule", json::array()},
        {"s_schedule", json::array()}}},
      {"optimizer", {{"lr", 1e-3}, {"beta1", 0.9}, {"beta2", 0.999}, {"eps", 1e-8}, {"clip", 1.0}}},
      {"delta_optimizer", {{"lr", 1e-2}, {"beta1", 0.9}, {"beta2", 0.999}, {"eps", 1e-8}, {"clip", 0.0}}},
      {"training",
       {{"epochs", 50u}, {"batch_size", 32u}, {"window_stride", 0u}, {"checkpoint_every", 1u}}},
      {"evaluation",
       {{"horizon", lorenz ? 200u : 101u},
        {"n_initial_conditions", lorenz ? 10u : 5u},
        {"ic_stride", lorenz ? 100u : 50u},
        {"vpt_threshold", 0.8},
        {"spectrum_band", {1u, 8u}},
        {"spectrum_step", 0u},
        {"rmse_step", lorenz ? 11u : 10u},
        {"bound_factor", 10.0},
        {"threads", 0u}}},
  };
  return tree;
}

json parse_yaml(const std::string& text) {
  try {
    return from_yaml(YAML::Load(text));
  } catch (const YAML::Exception& e) {
    throw ConfigError(std::string("config is not valid YAML: ") + e.what());
  }
}

std::string emit_yaml(const json& tree) {
  YAML::Emitter out;
  emit(out, tree);
  return std::string(out.c_str()) + "\n";
}

ExperimentConfig resolve_config(const json& user) {
  if (!user.is_object()) throw ConfigError("config must be a key-value tree");
  if (!user.contains("system") || !user["system"].is_object() || !user["system"].contains("kind")) {
    throw ConfigError("missing required config key 'system.kind' (lorenz63 or kolmogorov2d)");
  }
  if (!user["system"]["kind"].is_string()) throw ConfigError("'system.kind' must be a string");
  const auto kind = systems::system_kind_from_string(user["system"]["kind"].get<std::string>());
  json tree = default_tree(kind);
  overlay(tree, user, "");

  ExperimentConfig c;
  try {
    c.name = tree["name"].get<std::string>();
    c.seed = tree["seed"].get<std::uint64_t>();
    c.deterministic = tree["deterministic"].get<bool>();
    c.output_dir = tree["output_dir"].is_null() ? std::filesystem::path("runs") / c.name
                                                : std::filesystem::path(tree["output_dir"].get<std::string>());
    c.system = systems::SystemSpec::from_json(tree["system"]);
    c.system.validate();
    c.dataset = {tree["dataset"]["n_traj"].get<std::size_t>(), tree["dataset"]["n_steps"].get<std::size_t>()};
    if (c.dataset.n_traj < 1 || c.dataset.n_steps < 2) {
      throw ConfigError("dataset needs n_traj >= 1 and n_steps >= 2");
    }

    const auto& sur = tree["surrogate"];
    c.surrogate.architecture = sur["architecture"].get<std::string>();
    if (c.surrogate.architecture == "reference") {
      c.surrogate.config = c.system.to_json();
    } else if (sur.contains(c.surrogate.architecture)) {
      c.surrogate.config = sur[c.surrogate.architecture];
    } else {
      throw ConfigError("unknown surrogate.architecture '" + c.surrogate.architecture +
                        "' (expected mlp, fno_lite or reference)");
    }

    auto& t = c.training;
    const auto& loss = tree["loss"];
    t.loss.mode = training::loss_mode_from_string(loss["mode"].get<std::string>());
    t.loss.n_rollouts = loss["n_rollouts"].get<std::size_t>();
    t.loss.lambda_decay = number(loss["lambda_decay"]);
    t.loss.pushforward = loss["pushforward"].get<bool>();
    t.loss.norm = training::loss_norm_from_string(loss["norm"].get<std::string>());
    const auto& mp = tree["mp"];
    t.mp = {mp["r"].get<std::size_t>(), mp["s"].get<std::size_t>(), number(mp["mu"]),
            training::penalty_norm_from_string(mp["penalty_norm"].get<std::string>())};
    const auto& cur = tree["curriculum"];
    if (cur["enabled"].get<bool>()) {
      training::CurriculumSchedule s;
      s.mu_init = number(cur["mu_init"]);
      s.mu_growth = number(cur["mu_growth"]);
      s.mu_update_every = cur["mu_update_every"].get<std::size_t>();
      s.mu_max = number(cur["mu_max"]);
      s.trigger = training::mu_trigger_from_string(cur["trigger"].get<std::string>());
      s.plateau_tolerance = number(cur["plateau_tolerance"]);
      s.r_schedule = milestones(cur["r_schedule"], "curriculum.r_schedule");
      s.s_schedule = milestones(cur["s_schedule"], "curriculum.s_schedule");
      s.validate();
      t.curriculum = s;
    }
    t.optimizer = adam_from(tree["optimizer"]);
    t.delta_optimizer = adam_from(tree["delta_optimizer"]);
    const auto& tr = tree["training"];
    t.epochs = tr["epochs"].get<std::size_t>();
    t.batch_size = tr["batch_size"].get<std::size_t>();
    t.window_stride = tr["window_stride"].get<std::size_t>();
    t.checkpoint_every = tr["checkpoint_every"].get<std::size_t>();
    t.seed = c.shuffle_seed();
    t.deterministic = c.deterministic;
    t.validate();

    const auto& ev = tree["evaluation"];
    auto& e = c.evaluation;
    e.horizon = ev["horizon"].get<std::size_t>();
    e.n_initial_conditions = ev["n_initial_conditions"].get<std::size_t>();
    e.ic_stride = ev["ic_stride"].get<std::size_t>();
    e.vpt_threshold = number(ev["vpt_threshold"]);
    if (ev["spectrum_band"].size() != 2) throw ConfigError("'evaluation.spectrum_band' must be [k_min, k_max]");
    e.spectrum_k_min = ev["spectrum_band"][0].get<std::size_t>();
    e.spectrum_k_max = ev["spectrum_band"][1].get<std::size_t>();
    e.spectrum_step = ev["spectrum_step"].get<std::size_t>();
    e.rmse_step = ev["rmse_step"].get<std::size_t>();
    e.bound_factor = number(ev["bound_factor"]);
    e.threads = c.deterministic ? 1 : ev["threads"].get<std::size_t>();
    e.validate();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("invalid config value: ") + e.what());
  }
  return c;
}

json ExperimentConfig::to_tree() const {
  json tree = default_tree(system.kind);
  tree["name"] = name;
  tree["seed"] = seed;
  tree["deterministic"] = deterministic;
  tree["output_dir"] = output_dir.string();
  tree["system"] = system.to_json();
  tree["dataset"] = {{"n_traj", dataset.n_traj}, {"n_steps", dataset.n_steps}};
  tree["surrogate"]["architecture"] = surrogate.architecture;
  if (surrogate.architecture != "reference") tree["surrogate"][surrogate.architecture] = surrogate.config;
  const auto& t = training;
  tree["loss"] = t.loss.to_json();
  tree["mp"] = t.mp.to_json();
  tree["curriculum"]["enabled"] = t.curriculum.has_value();
  if (t.curriculum) {
    tree["curriculum"] = t.curriculum->to_json();
    tree["curriculum"]["enabled"] = true;
  }
  tree["optimizer"] = t.optimizer.to_json();
  tree["delta_optimizer"] = t.delta_optimizer.to_json();
  tree["training"] = {{"epochs", t.epochs},
                      {"batch_size", t.batch_size},
                      {"window_stride", t.window_stride},
                      {"checkpoint_every", t.checkpoint_every}};
  tree["evaluation"] = evaluation.to_json();
  return tree;
}

std::string ExperimentConfig::to_yaml() const { return emit_yaml(to_tree()); }

ExperimentConfig config_from_yaml(const std::string& text) { return resolve_config(parse_yaml(text)); }

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return config_from_yaml(ss.str());
}

}  // namespace mpstep::experiment
