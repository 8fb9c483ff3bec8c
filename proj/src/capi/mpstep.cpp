#include "mpstep/mpstep.h"

#include <algorithm>
#include <cstdlib>
#include <cstring>
#include <memory>
#include <mutex>
#include <string>

#include "common/error.hpp"
#include "experiment/runner.hpp"
#include "surrogates/checkpoint.hpp"
#include "systems/dataset.hpp"

struct mps_config {
  mpstep::experiment::ExperimentConfig cfg;
};

struct mps_dataset {
  mpstep::systems::TrajectoryDataset ds;
};

struct mps_model {
  std::unique_ptr<mpstep::surrogates::Surrogate> model;
  std::size_t state_size = 0;
};

namespace {

thread_local std::string g_last_error;

std::mutex g_log_mutex;
mps_log_fn g_log_fn = nullptr;
void* g_log_user = nullptr;

void emit(const std::string& line) {
  std::lock_guard<std::mutex> lock(g_log_mutex);
  if (g_log_fn) g_log_fn(line.c_str(), g_log_user);
}

mpstep::experiment::Logger logger() { return emit; }

template <class F>
mps_status guarded(F&& f) {
  try {
    f();
    g_last_error.clear();
    return MPS_OK;
  } catch (const mpstep::ConfigError& e) {
    g_last_error = e.what();
    return MPS_ERR_CONFIG;
  } catch (const mpstep::ShapeError& e) {
    g_last_error = e.what();
    return MPS_ERR_CONFIG;
  } catch (const mpstep::NumericalError& e) {
    g_last_error = e.what();
    return MPS_ERR_NUMERICAL;
  } catch (const mpstep::IoError& e) {
    g_last_error = e.what();
    return MPS_ERR_IO;
  } catch (const std::filesystem::filesystem_error& e) {
    g_last_error = e.what();
    return MPS_ERR_IO;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return MPS_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown error";
    return MPS_ERR_INTERNAL;
  }
}

mps_status null_argument(const char* name) {
  g_last_error = std::string("argument '") + name + "' must not be NULL";
  return MPS_ERR_CONFIG;
}

std::optional<std::filesystem::path> opt_path(const char* p) {
  if (p == nullptr || *p == '\0') return std::nullopt;
  return std::filesystem::path(p);
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out == nullptr) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

void advance(const mps_model& m, const double* in, double* out) {
  mpstep::ad::Shape shape{1};
  const auto& s = m.model->state_shape();
  shape.insert(shape.end(), s.begin(), s.end());
  const auto q = mpstep::ad::Tensor::from(shape, std::vector<double>(in, in + m.state_size));
  const auto next = m.model->forward(q);
  const auto values = next.values();
  std::copy(values.begin(), values.end(), out);
}

}  // namespace

extern "C" {

const char* mps_last_error(void) { return g_last_error.c_str(); }

const char* mps_version(void) { return "0.1.0"; }

void mps_set_log_callback(mps_log_fn fn, void* user) {
  std::lock_guard<std::mutex> lock(g_log_mutex);
  g_log_fn = fn;
  g_log_user = user;
}

void mps_string_free(char* s) { std::free(s); }

mps_status mps_config_load(const char* path, mps_config** out) {
  if (path == nullptr) return null_argument("path");
  if (out == nullptr) return null_argument("out");
  *out = nullptr;
  return guarded([&] { *out = new mps_config{mpstep::experiment::load_config(path)}; });
}

mps_status mps_config_parse(const char* yaml_text, mps_config** out) {
  if (yaml_text == nullptr) return null_argument("yaml_text");
  if (out == nullptr) return null_argument("out");
  *out = nullptr;
  return guarded([&] { *out = new mps_config{mpstep::experiment::config_from_yaml(yaml_text)}; });
}

void mps_config_free(mps_config* cfg) { delete cfg; }

mps_status mps_config_set_seed(mps_config* cfg, uint64_t seed) {
  if (cfg == nullptr) return null_argument("cfg");
  return guarded([&] {
    cfg->cfg.seed = seed;
    cfg->cfg.training.seed = cfg->cfg.shuffle_seed();
  });
}

mps_status mps_config_set_deterministic(mps_config* cfg, int on) {
  if (cfg == nullptr) return null_argument("cfg");
  return guarded([&] {
    cfg->cfg.deterministic = on != 0;
    cfg->cfg.training.deterministic = on != 0;
    if (on) cfg->cfg.evaluation.threads = 1;
  });
}

mps_status mps_config_set_output_dir(mps_config* cfg, const char* dir) {
  if (cfg == nullptr) return null_argument("cfg");
  if (dir == nullptr) return null_argument("dir");
  return guarded([&] { cfg->cfg.output_dir = dir; });
}

mps_status mps_config_to_yaml(const mps_config* cfg, char** out) {
  if (cfg == nullptr) return null_argument("cfg");
  if (out == nullptr) return null_argument("out");
  return guarded([&] { *out = dup_string(cfg->cfg.to_yaml()); });
}

mps_status mps_config_name(const mps_config* cfg, char** out) {
  if (cfg == nullptr) return null_argument("cfg");
  if (out == nullptr) return null_argument("out");
  return guarded([&] { *out = dup_string(cfg->cfg.name); });
}

mps_status mps_generate(const mps_config* cfg, const char* out_path, int force) {
  if (cfg == nullptr) return null_argument("cfg");
  return guarded([&] {
    mpstep::experiment::cmd_generate(cfg->cfg, {opt_path(out_path), force != 0}, logger());
  });
}

mps_status mps_train(const mps_config* cfg, const char* dataset_path, const char* run_dir,
                     const char* resume_checkpoint, int force) {
  if (cfg == nullptr) return null_argument("cfg");
  return guarded([&] {
    mpstep::experiment::cmd_train(
        cfg->cfg, {opt_path(dataset_path), opt_path(run_dir), opt_path(resume_checkpoint), force != 0}, logger());
  });
}

mps_status mps_evaluate(const mps_config* cfg, const char* checkpoint_path, const char* dataset_path,
                        const char* run_dir, int force) {
  if (cfg == nullptr) return null_argument("cfg");
  return guarded([&] {
    mpstep::experiment::cmd_eval(
        cfg->cfg, {opt_path(checkpoint_path), opt_path(dataset_path), opt_path(run_dir), force != 0}, logger());
  });
}

mps_status mps_compare(const mps_config* cfg, const char* const* run_dirs, size_t n_runs, const char* out_dir,
                       int force) {
  if (run_dirs == nullptr && n_runs > 0) return null_argument("run_dirs");
  return guarded([&] {
    mpstep::experiment::CompareOptions opt;
    for (size_t i = 0; i < n_runs; ++i) {
      if (run_dirs[i] == nullptr) throw mpstep::ConfigError("run directory must not be NULL");
      opt.runs.emplace_back(run_dirs[i]);
    }
    opt.out = opt_path(out_dir);
    opt.force = force != 0;
    std::optional<mpstep::experiment::ExperimentConfig> c;
    if (cfg != nullptr) c = cfg->cfg;
    mpstep::experiment::cmd_compare(c, opt, logger());
  });
}

mps_status mps_dataset_load(const char* path, mps_dataset** out) {
  if (path == nullptr) return null_argument("path");
  if (out == nullptr) return null_argument("out");
  *out = nullptr;
  return guarded([&] { *out = new mps_dataset{mpstep::systems::load_dataset(path)}; });
}

void mps_dataset_free(mps_dataset* ds) { delete ds; }

size_t mps_dataset_n_traj(const mps_dataset* ds) { return ds ? ds->ds.n_traj : 0; }
size_t mps_dataset_n_steps(const mps_dataset* ds) { return ds ? ds->ds.n_steps : 0; }
size_t mps_dataset_state_size(const mps_dataset* ds) { return ds ? ds->ds.state_size() : 0; }
double mps_dataset_dt(const mps_dataset* ds) { return ds ? ds->ds.dt_effective() : 0.0; }
uint32_t mps_dataset_checksum(const mps_dataset* ds) { return ds ? mpstep::systems::dataset_checksum(ds->ds) : 0; }

mps_status mps_dataset_state(const mps_dataset* ds, size_t traj, size_t step, double* out) {
  if (ds == nullptr) return null_argument("ds");
  if (out == nullptr) return null_argument("out");
  return guarded([&] {
    if (traj >= ds->ds.n_traj || step >= ds->ds.n_steps) {
      throw mpstep::ConfigError("state index out of range");
    }
    const auto s = ds->ds.state(traj, step);
    std::copy(s.begin(), s.end(), out);
  });
}

mps_status mps_model_load(const char* checkpoint_path, mps_model** out) {
  if (checkpoint_path == nullptr) return null_argument("checkpoint_path");
  if (out == nullptr) return null_argument("out");
  *out = nullptr;
  return guarded([&] {
    const auto ckpt = mpstep::surrogates::load_checkpoint(checkpoint_path);
    auto m = std::make_unique<mps_model>();
    m->model = mpstep::surrogates::restore_surrogate(ckpt);
    m->state_size = mpstep::ad::numel(m->model->state_shape());
    *out = m.release();
  });
}

void mps_model_free(mps_model* model) { delete model; }

size_t mps_model_state_size(const mps_model* model) { return model ? model->state_size : 0; }

size_t mps_model_parameter_count(const mps_model* model) { return model ? model->model->parameter_count() : 0; }

mps_status mps_model_step(const mps_model* model, const double* in, double* out) {
  if (model == nullptr) return null_argument("model");
  if (in == nullptr) return null_argument("in");
  if (out == nullptr) return null_argument("out");
  return guarded([&] { advance(*model, in, out); });
}

mps_status mps_model_rollout(const mps_model* model, const double* q0, size_t n_states, double* out) {
  if (model == nullptr) return null_argument("model");
  if (q0 == nullptr) return null_argument("q0");
  if (out == nullptr && n_states > 0) return null_argument("out");
  return guarded([&] {
    if (n_states == 0) return;
    const std::size_t n = model->state_size;
    std::copy(q0, q0 + n, out);
    for (size_t t = 1; t < n_states; ++t) advance(*model, out + (t - 1) * n, out + t * n);
  });
}

}  // extern "C"
