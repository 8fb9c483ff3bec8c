#include "systems/dataset.hpp"

#include <cmath>
#include <future>
#include <thread>

#include "common/container.hpp"
#include "common/error.hpp"
#include "common/rng.hpp"
#include "systems/kolmogorov2d.hpp"
#include "systems/lorenz63.hpp"

namespace mpstep::systems {
namespace {

constexpr char kMagic[] = "MPDS";
constexpr std::uint16_t kVersion = 1;

std::vector<double> generate_lorenz(const SystemSpec& spec, std::size_t n_steps, std::uint64_t seed) {
  const auto p = Lorenz63Params::from_spec(spec);
  Rng rng(seed);
  std::uniform_real_distribution<double> uxy(-15.0, 15.0);
  std::uniform_real_distribution<double> uz(5.0, 40.0);
  Lorenz63State s{uxy(rng), uxy(rng), uz(rng)};
  s = lorenz63_advance(s, p, spec.integrator_dt, spec.spinup_steps);
  std::vector<double> out;
  out.reserve(3 * n_steps);
  for (std::size_t j = 0; j < n_steps; ++j) {
    if (j > 0) s = lorenz63_advance(s, p, spec.integrator_dt, spec.subsample_factor);
    out.insert(out.end(), s.begin(), s.end());
  }
  return out;
}

std::vector<double> generate_kolmogorov(const SystemSpec& spec, std::size_t n_steps, std::uint64_t seed) {
  const KolmogorovSolver solver(spec);
  Rng rng(seed);
  SpectralField w = solver.random_initial_condition(rng);
  const double dt = spec.integrator_dt;
  std::size_t step = 0;
  for (; step < spec.spinup_steps; ++step) w = solver.step(w, dt, step);

  // Continue until the energy series is stationary: consecutive window means
  // agree within spinup_tol.
  const auto window = static_cast<std::size_t>(spec.param("spinup_window"));
  const double tol = spec.param("spinup_tol");
  const auto limit = static_cast<std::size_t>(spec.param("spinup_max"));
  double previous = -1.0;
  while (step < limit) {
    double acc = 0.0;
    for (std::size_t i = 0; i < window; ++i, ++step) {
      w = solver.step(w, dt, step);
      acc += solver.kinetic_energy(w);
    }
    const double current = acc / static_cast<double>(window);
    if (previous > 0.0 && std::abs(current - previous) <= tol * previous) break;
    previous = current;
  }

  std::vector<double> out;
  out.reserve(n_steps * solver.n() * solver.n());
  for (std::size_t j = 0; j < n_steps; ++j) {
    if (j > 0) {
      for (std::size_t i = 0; i < spec.subsample_factor; ++i, ++step) w = solver.step(w, dt, step);
    }
    // The stored physical field is authoritative: restart from its transform
    // so integrating from any stored state reproduces the stored successor.
    const auto phys = solver.to_physical(w);
    w = solver.to_spectral(phys);
    out.insert(out.end(), phys.begin(), phys.end());
  }
  return out;
}

}  // namespace

std::string to_string(Split s) {
  switch (s) {
    case Split::Train: return "train";
    case Split::Validation: return "validation";
    case Split::Test: return "test";
  }
  return "?";
}

void Normalization::normalize(std::span<double> state) const {
  const std::size_t per = state.size() / mean.size();
  for (std::size_t c = 0; c < mean.size(); ++c) {
    for (std::size_t i = 0; i < per; ++i) state[c * per + i] = (state[c * per + i] - mean[c]) / std[c];
  }
}

void Normalization::denormalize(std::span<double> state) const {
  const std::size_t per = state.size() / mean.size();
  for (std::size_t c = 0; c < mean.size(); ++c) {
    for (std::size_t i = 0; i < per; ++i) state[c * per + i] = state[c * per + i] * std[c] + mean[c];
  }
}

std::span<const double> TrajectoryDataset::trajectory(std::size_t traj) const {
  const std::size_t block = n_steps * state_size();
  return std::span<const double>(states).subspan(traj * block, block);
}

std::span<const double> TrajectoryDataset::state(std::size_t traj, std::size_t step) const {
  return trajectory(traj).subspan(step * state_size(), state_size());
}

std::vector<std::size_t> TrajectoryDataset::trajectories(Split split) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < splits.size(); ++i) {
    if (splits[i] == split) out.push_back(i);
  }
  return out;
}

void TrajectoryDataset::validate() const {
  if (n_steps < 2) throw FormatError("dataset needs at least 2 steps per trajectory");
  if (states.size() != n_traj * n_steps * state_size()) {
    throw FormatError("dataset state buffer does not match its declared shape");
  }
  if (splits.size() != n_traj) throw FormatError("dataset split tags do not cover every trajectory");
  if (normalization.mean.size() != channels() || normalization.std.size() != channels()) {
    throw FormatError("dataset normalization does not match its channel count");
  }
  for (double v : states) {
    if (!std::isfinite(v)) throw FormatError("dataset contains non-finite values");
  }
}

std::vector<Split> default_splits(std::size_t n_traj) {
  std::size_t n_val = static_cast<std::size_t>(std::llround(0.1 * static_cast<double>(n_traj)));
  std::size_t n_test = n_val;
  if (n_traj >= 3) {
    n_val = std::max<std::size_t>(n_val, 1);
    n_test = std::max<std::size_t>(n_test, 1);
  }
  const std::size_t n_train = n_traj - n_val - n_test;
  std::vector<Split> out(n_traj, Split::Train);
  for (std::size_t i = n_train; i < n_train + n_val; ++i) out[i] = Split::Validation;
  for (std::size_t i = n_train + n_val; i < n_traj; ++i) out[i] = Split::Test;
  return out;
}

Normalization compute_normalization(const TrajectoryDataset& ds) {
  const std::size_t channels = ds.channels();
  const std::size_t per = ds.state_size() / channels;
  std::vector<double> sum(channels, 0.0), sq(channels, 0.0);
  double count = 0.0;
  for (std::size_t t : ds.trajectories(Split::Train)) {
    for (std::size_t j = 0; j < ds.n_steps; ++j) {
      const auto s = ds.state(t, j);
      for (std::size_t c = 0; c < channels; ++c) {
        for (std::size_t i = 0; i < per; ++i) sum[c] += s[c * per + i];
      }
    }
    count += static_cast<double>(ds.n_steps * per);
  }
  Normalization norm;
  norm.mean.resize(channels, 0.0);
  norm.std.resize(channels, 1.0);
  if (count == 0.0) return norm;
  for (std::size_t c = 0; c < channels; ++c) norm.mean[c] = sum[c] / count;
  for (std::size_t t : ds.trajectories(Split::Train)) {
    for (std::size_t j = 0; j < ds.n_steps; ++j) {
      const auto s = ds.state(t, j);
      for (std::size_t c = 0; c < channels; ++c) {
        for (std::size_t i = 0; i < per; ++i) {
          const double d = s[c * per + i] - norm.mean[c];
          sq[c] += d * d;
        }
      }
    }
  }
  for (std::size_t c = 0; c < channels; ++c) {
    const double sd = std::sqrt(sq[c] / count);
    norm.std[c] = sd > 0.0 ? sd : 1.0;
  }
  return norm;
}

TrajectoryDataset generate_dataset(const SystemSpec& spec, std::size_t n_traj, std::size_t n_steps,
                                   std::uint64_t seed, bool parallel) {
  spec.validate();
  if (n_steps < 2) throw ConfigError("a dataset needs at least 2 stored steps per trajectory");
  if (n_traj < 1) throw ConfigError("a dataset needs at least one trajectory");

  auto one = [&](std::size_t i) {
    const std::uint64_t s = derive_seed(seed, i);
    try {
      return spec.kind == SystemKind::Lorenz63 ? generate_lorenz(spec, n_steps, s)
                                               : generate_kolmogorov(spec, n_steps, s);
    } catch (const NumericalError& e) {
      throw NumericalError("blow-up while generating trajectory " + std::to_string(i) + ": " + e.what());
    }
  };

  std::vector<std::vector<double>> parts(n_traj);
  const std::size_t workers = parallel ? std::max(1u, std::thread::hardware_concurrency()) : 1;
  if (workers <= 1 || n_traj == 1) {
    for (std::size_t i = 0; i < n_traj; ++i) parts[i] = one(i);
  } else {
    for (std::size_t start = 0; start < n_traj; start += workers) {
      std::vector<std::future<std::vector<double>>> jobs;
      for (std::size_t i = start; i < std::min(n_traj, start + workers); ++i) {
        jobs.push_back(std::async(std::launch::async, one, i));
      }
      for (std::size_t k = 0; k < jobs.size(); ++k) parts[start + k] = jobs[k].get();
    }
  }

  TrajectoryDataset ds;
  ds.spec = spec;
  ds.n_traj = n_traj;
  ds.n_steps = n_steps;
  ds.state_shape = spec.state_shape();
  ds.seed = seed;
  ds.states.reserve(n_traj * n_steps * ds.state_size());
  for (auto& p : parts) ds.states.insert(ds.states.end(), p.begin(), p.end());
  ds.splits = default_splits(n_traj);
  ds.normalization = compute_normalization(ds);
  if (spec.kind == SystemKind::Lorenz63) {
    for (double v : ds.states) {
      if (std::abs(v) >= 100.0) throw NumericalError("Lorenz-63 state left the bounded attractor region");
    }
  }
  ds.validate();
  return ds;
}

std::uint32_t dataset_checksum(const TrajectoryDataset& ds) { return io::crc32(ds.states); }

void save_dataset(const TrajectoryDataset& ds, const std::filesystem::path& path) {
  ds.validate();
  ad::Shape shape{ds.n_traj, ds.n_steps};
  shape.insert(shape.end(), ds.state_shape.begin(), ds.state_shape.end());
  std::vector<std::string> splits;
  for (auto s : ds.splits) splits.push_back(to_string(s));
  const nlohmann::json header = {
      {"spec", ds.spec.to_json()},
      {"shapes", {{"states", shape}}},
      {"dtype", "float64"},
      {"normalization", {{"mean", ds.normalization.mean}, {"std", ds.normalization.std}}},
      {"splits", splits},
      {"seed", ds.seed},
      {"dt_effective", ds.dt_effective()},
      {"extra", ds.extra},
  };
  io::write_container(path, kMagic, kVersion, header, ds.states);
}

TrajectoryDataset load_dataset(const std::filesystem::path& path) {
  auto c = io::read_container(path, kMagic, kVersion);
  TrajectoryDataset ds;
  try {
    const auto& h = c.header;
    if (h.at("dtype").get<std::string>() != "float64") throw FormatError("unsupported dtype in " + path.string());
    ds.spec = SystemSpec::from_json(h.at("spec"));
    const auto shape = h.at("shapes").at("states").get<std::vector<std::size_t>>();
    if (shape.size() < 3) throw FormatError("dataset shape needs at least 3 axes in " + path.string());
    ds.n_traj = shape[0];
    ds.n_steps = shape[1];
    ds.state_shape.assign(shape.begin() + 2, shape.end());
    ds.normalization.mean = h.at("normalization").at("mean").get<std::vector<double>>();
    ds.normalization.std = h.at("normalization").at("std").get<std::vector<double>>();
    for (const auto& s : h.at("splits")) {
      const auto name = s.get<std::string>();
      ds.splits.push_back(name == "train" ? Split::Train
                                          : name == "validation" ? Split::Validation : Split::Test);
    }
    ds.seed = h.at("seed").get<std::uint64_t>();
    if (h.contains("extra")) ds.extra = h.at("extra");
    io::check_payload_size(c, ds.n_traj * ds.n_steps * ds.state_size());
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("malformed dataset header in " + path.string() + ": " + e.what());
  } catch (const ConfigError& e) {
    throw FormatError("invalid system spec in " + path.string() + ": " + e.what());
  }
  ds.states = std::move(c.payload);
  ds.validate();
  return ds;
}

}  // namespace mpstep::systems
