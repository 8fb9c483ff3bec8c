/* mpstep: multiple-shooting training of autoregressive surrogates. */
#ifndef MPSTEP_MPSTEP_H
#define MPSTEP_MPSTEP_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(_WIN32)
#define MPS_API __declspec(dllexport)
#else
#define MPS_API __attribute__((visibility("default")))
#endif

typedef enum mps_status {
  MPS_OK = 0,
  MPS_ERR_INTERNAL = 1,
  MPS_ERR_CONFIG = 2,
  MPS_ERR_NUMERICAL = 3,
  MPS_ERR_IO = 4
} mps_status;

typedef struct mps_config mps_config;
typedef struct mps_dataset mps_dataset;
typedef struct mps_model mps_model;

/* Message of the last failed call on this thread; empty after success. */
MPS_API const char* mps_last_error(void);
MPS_API const char* mps_version(void);

/* Progress lines from the commands. NULL restores silence. */
typedef void (*mps_log_fn)(const char* line, void* user);
MPS_API void mps_set_log_callback(mps_log_fn fn, void* user);

/* Strings returned through char** are owned by the caller. */
MPS_API void mps_string_free(char* s);

/* ---- configuration ---- */
MPS_API mps_status mps_config_load(const char* path, mps_config** out);
MPS_API mps_status mps_config_parse(const char* yaml_text, mps_config** out);
MPS_API void mps_config_free(mps_config* cfg);
MPS_API mps_status mps_config_set_seed(mps_config* cfg, uint64_t seed);
/* Float64 sequential mode: single-threaded generation and evaluation,
   wall-clock columns of the training log written as 0. */
MPS_API mps_status mps_config_set_deterministic(mps_config* cfg, int on);
MPS_API mps_status mps_config_set_output_dir(mps_config* cfg, const char* dir);
MPS_API mps_status mps_config_to_yaml(const mps_config* cfg, char** out);
MPS_API mps_status mps_config_name(const mps_config* cfg, char** out);

/* ---- commands ----
   Optional path arguments may be NULL; defaults follow the run directory
   layout (config.resolved, dataset.ref, checkpoints/latest.mpck,
   logs/train.csv, metrics/). Existing outputs are refused unless force. */
MPS_API mps_status mps_generate(const mps_config* cfg, const char* out_path, int force);
MPS_API mps_status mps_train(const mps_config* cfg, const char* dataset_path, const char* run_dir,
                             const char* resume_checkpoint, int force);
MPS_API mps_status mps_evaluate(const mps_config* cfg, const char* checkpoint_path, const char* dataset_path,
                                const char* run_dir, int force);
/* cfg may be NULL; then the first run's evaluation settings are used. */
MPS_API mps_status mps_compare(const mps_config* cfg, const char* const* run_dirs, size_t n_runs,
                               const char* out_dir, int force);

/* ---- datasets ---- */
MPS_API mps_status mps_dataset_load(const char* path, mps_dataset** out);
MPS_API void mps_dataset_free(mps_dataset* ds);
MPS_API size_t mps_dataset_n_traj(const mps_dataset* ds);
MPS_API size_t mps_dataset_n_steps(const mps_dataset* ds);
MPS_API size_t mps_dataset_state_size(const mps_dataset* ds);
MPS_API double mps_dataset_dt(const mps_dataset* ds);
MPS_API uint32_t mps_dataset_checksum(const mps_dataset* ds);
/* Copies state_size values of trajectory `traj` at `step` into out. */
MPS_API mps_status mps_dataset_state(const mps_dataset* ds, size_t traj, size_t step, double* out);

/* ---- trained surrogates ---- */
MPS_API mps_status mps_model_load(const char* checkpoint_path, mps_model** out);
MPS_API void mps_model_free(mps_model* model);
MPS_API size_t mps_model_state_size(const mps_model* model);
MPS_API size_t mps_model_parameter_count(const mps_model* model);
/* One surrogate step: out = F(in), both of length state_size. */
MPS_API mps_status mps_model_step(const mps_model* model, const double* in, double* out);
/* n_states states starting with q0; out holds n_states * state_size values. */
MPS_API mps_status mps_model_rollout(const mps_model* model, const double* q0, size_t n_states, double* out);

#ifdef __cplusplus
}
#endif

#endif
