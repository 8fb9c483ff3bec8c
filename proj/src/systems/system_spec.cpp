#include "systems/system_spec.hpp"

#include <cmath>
#include <numbers>

#include "autodiff/fft.hpp"
#include "common/error.hpp"

namespace mpstep::systems {

std::string to_string(SystemKind kind) {
  return kind == SystemKind::Lorenz63 ? "lorenz63" : "kolmogorov2d";
}

SystemKind system_kind_from_string(const std::string& name) {
  if (name == "lorenz63") return SystemKind::Lorenz63;
  if (name == "kolmogorov2d") return SystemKind::Kolmogorov2d;
  throw ConfigError("unknown system kind '" + name + "' (expected lorenz63 or kolmogorov2d)");
}

SystemSpec SystemSpec::lorenz63() {
  SystemSpec s;
  s.kind = SystemKind::Lorenz63;
  s.parameters = {{"sigma", 10.0}, {"rho", 28.0}, {"beta", 8.0 / 3.0}};
  s.integrator_dt = 0.01;
  s.subsample_factor = 10;
  s.spinup_steps = 1000;
  return s;
}

SystemSpec SystemSpec::kolmogorov2d() {
  SystemSpec s;
  s.kind = SystemKind::Kolmogorov2d;
  s.parameters = {{"re", 1000.0},
                  {"kf", 4.0},
                  {"n", 64.0},
                  {"length", 2.0 * std::numbers::pi},
                  {"drag", 0.1},
                  {"cfl_max", 1.0},
                  {"ic_peak", 4.0},
                  {"ic_velocity", 1.0},
                  {"spinup_window", 625.0},
                  {"spinup_tol", 0.05},
                  {"spinup_max", 5000.0}};
  s.integrator_dt = 0.008;
  s.subsample_factor = 25;
  s.spinup_steps = 1250;
  return s;
}

SystemSpec SystemSpec::defaults_for(SystemKind kind) {
  return kind == SystemKind::Lorenz63 ? lorenz63() : kolmogorov2d();
}

double SystemSpec::param(const std::string& name) const {
  auto it = parameters.find(name);
  if (it == parameters.end()) {
    throw ConfigError("system " + to_string(kind) + " has no parameter '" + name + "'");
  }
  return it->second;
}

std::size_t SystemSpec::grid_size() const { return static_cast<std::size_t>(param("n")); }

ad::Shape SystemSpec::state_shape() const {
  if (kind == SystemKind::Lorenz63) return {3};
  const auto n = grid_size();
  return {1, n, n};
}

void SystemSpec::validate() const {
  if (!(integrator_dt > 0.0)) throw ConfigError("system.integrator_dt must be > 0");
  if (subsample_factor < 1) throw ConfigError("system.subsample_factor must be >= 1");
  if (kind == SystemKind::Lorenz63) {
    for (const char* p : {"sigma", "rho", "beta"}) (void)param(p);
    return;
  }
  const double n = param("n");
  if (n < 4 || n != std::floor(n) || !fft::is_power_of_two(static_cast<std::size_t>(n))) {
    throw ConfigError("kolmogorov2d grid size n must be a power of two >= 4");
  }
  if (!(param("re") > 0.0)) throw ConfigError("kolmogorov2d re must be > 0");
  if (!(param("length") > 0.0)) throw ConfigError("kolmogorov2d length must be > 0");
  if (param("drag") < 0.0) throw ConfigError("kolmogorov2d drag must be >= 0");
  if (!(param("cfl_max") > 0.0)) throw ConfigError("kolmogorov2d cfl_max must be > 0");
  if (param("spinup_window") < 1.0) throw ConfigError("kolmogorov2d spinup_window must be >= 1");
}

nlohmann::json SystemSpec::to_json() const {
  return {{"kind", to_string(kind)},
          {"parameters", parameters},
          {"integrator_dt", integrator_dt},
          {"subsample_factor", subsample_factor},
          {"spinup_steps", spinup_steps}};
}

SystemSpec SystemSpec::from_json(const nlohmann::json& j) {
  SystemSpec s;
  s.kind = system_kind_from_string(j.at("kind").get<std::string>());
  s.parameters = j.at("parameters").get<std::map<std::string, double>>();
  s.integrator_dt = j.at("integrator_dt").get<double>();
  s.subsample_factor = j.at("subsample_factor").get<std::size_t>();
  s.spinup_steps = j.at("spinup_steps").get<std::size_t>();
  return s;
}

}  // namespace mpstep::systems
