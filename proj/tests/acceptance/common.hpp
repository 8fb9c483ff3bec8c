#pragma once

// Artifact caching shared by the training-based criteria. A cached artifact
// is reused only if its file exists; delete the work directory to retrain.

#include <cstdio>
#include <filesystem>
#include <memory>
#include <string>

#include "evaluation/evaluate.hpp"
#include "surrogates/checkpoint.hpp"
#include "systems/dataset.hpp"
#include "training/trainer.hpp"

namespace acceptance {

inline std::string format(const char* f, double v) {
  char buf[96];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

inline void progress(const std::string& line) {
  std::fprintf(stderr, "  %s\n", line.c_str());
  std::fflush(stderr);
}

inline mpstep::systems::TrajectoryDataset cached_dataset(const std::filesystem::path& path,
                                                         const mpstep::systems::SystemSpec& spec,
                                                         std::size_t n_traj, std::size_t n_steps,
                                                         std::uint64_t seed) {
  using namespace mpstep::systems;
  if (std::filesystem::exists(path)) return load_dataset(path);
  progress("generating " + path.filename().string());
  auto ds = generate_dataset(spec, n_traj, n_steps, seed, true);
  std::filesystem::create_directories(path.parent_path());
  save_dataset(ds, path);
  return ds;
}

// Trains `model` in place under `cfg` unless `ckpt_path` already holds the
// result, in which case the parameters are loaded from it. The training log
// is written next to the checkpoint (<stem>.csv).
inline void cached_training(const mpstep::systems::TrajectoryDataset& ds, mpstep::surrogates::Surrogate& model,
                            mpstep::training::TrainConfig cfg, const std::filesystem::path& ckpt_path) {
  using namespace mpstep;
  if (std::filesystem::exists(ckpt_path)) {
    surrogates::load_parameters(model, surrogates::load_checkpoint(ckpt_path));
    return;
  }
  std::filesystem::create_directories(ckpt_path.parent_path());
  const auto tmp = std::filesystem::path(ckpt_path).replace_extension(".partial");
  cfg.log_path = std::filesystem::path(ckpt_path).replace_extension(".csv");
  cfg.checkpoint_path = tmp;
  cfg.checkpoint_every = cfg.epochs;
  progress("training " + ckpt_path.stem().string() + " (" + training::to_string(cfg.loss.mode) + ", " +
           std::to_string(cfg.epochs) + " epochs)");
  training::Trainer trainer(ds, model, cfg);
  trainer.run([&](const training::EpochLog& row) {
    if (row.epoch % 5 == 4 || row.epoch + 1 == cfg.epochs) {
      progress("  epoch " + std::to_string(row.epoch) + " gt " + format("%.4e", row.loss_gt) + " mean|delta| " +
               format("%.3e", row.mean_delta_norm) + " mu " + format("%.1e", row.mu) + " r=" +
               std::to_string(row.r) + " s=" + std::to_string(row.s));
    }
  });
  std::filesystem::rename(tmp, ckpt_path);
}

}  // namespace acceptance
