#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mpstep/mpstep.h"

namespace {

void print_line(const char* line, void*) { std::printf("%s\n", line); }

int fail(mps_status status) {
  std::fprintf(stderr, "error: %s\n", mps_last_error());
  return static_cast<int>(status);
}

const char* c_str(const std::string& s) { return s.empty() ? nullptr : s.c_str(); }

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  bool force = false;
  bool deterministic = false;
};

void add_common(CLI::App* cmd, Common& c, bool config_required) {
  auto* opt = cmd->add_option("--config", c.config, "experiment config file")->check(CLI::ExistingFile);
  if (config_required) opt->required();
  cmd->add_option("--seed", c.seed, "master seed (overrides the config)");
  cmd->add_option("--out", c.out, "output location");
  cmd->add_flag("--force", c.force, "overwrite existing outputs");
  cmd->add_flag("--deterministic", c.deterministic, "float64 sequential mode");
}

// Loads and adjusts the config; returns a status and leaves `cfg` null on failure.
mps_status load(const Common& c, mps_config** cfg) {
  mps_status st = mps_config_load(c.config.c_str(), cfg);
  if (st != MPS_OK) return st;
  if (c.seed && (st = mps_config_set_seed(*cfg, *c.seed)) != MPS_OK) return st;
  if (c.deterministic && (st = mps_config_set_deterministic(*cfg, 1)) != MPS_OK) return st;
  return MPS_OK;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"mpstep: multi-step penalty training of autoregressive surrogates"};
  app.require_subcommand(1);

  Common gen, train, eval, cmp;
  std::string train_dataset, resume;
  std::string eval_dataset, eval_checkpoint;
  std::vector<std::string> runs;

  auto* g = app.add_subcommand("generate", "integrate the reference system and write a dataset");
  add_common(g, gen, true);
  auto* t = app.add_subcommand("train", "train a surrogate into a run directory");
  add_common(t, train, true);
  t->add_option("--dataset", train_dataset, "dataset file (default: from the run directory)");
  t->add_option("--resume", resume, "checkpoint to continue from")->check(CLI::ExistingFile);
  auto* e = app.add_subcommand("eval", "roll out a trained surrogate and write metric CSVs");
  add_common(e, eval, true);
  e->add_option("--dataset", eval_dataset, "dataset file (default: from the run directory)");
  e->add_option("--checkpoint", eval_checkpoint, "checkpoint (default: <run>/checkpoints/latest.mpck)");
  auto* c = app.add_subcommand("compare", "evaluate several runs on the same test set");
  add_common(c, cmp, false);
  c->add_option("runs", runs, "run directories")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int code = app.exit(err);
    return code == 0 ? 0 : 2;
  }

  mps_set_log_callback(print_line, nullptr);
  mps_config* cfg = nullptr;
  mps_status st = MPS_OK;

  if (g->parsed()) {
    if ((st = load(gen, &cfg)) == MPS_OK) st = mps_generate(cfg, c_str(gen.out), gen.force);
  } else if (t->parsed()) {
    if ((st = load(train, &cfg)) == MPS_OK) {
      st = mps_train(cfg, c_str(train_dataset), c_str(train.out), c_str(resume), train.force);
    }
  } else if (e->parsed()) {
    if ((st = load(eval, &cfg)) == MPS_OK) {
      st = mps_evaluate(cfg, c_str(eval_checkpoint), c_str(eval_dataset), c_str(eval.out), eval.force);
    }
  } else if (c->parsed()) {
    if (!cmp.config.empty()) st = load(cmp, &cfg);
    if (st == MPS_OK) {
      std::vector<const char*> dirs;
      for (const auto& r : runs) dirs.push_back(r.c_str());
      st = mps_compare(cfg, dirs.data(), dirs.size(), c_str(cmp.out), cmp.force);
    }
  }
  mps_config_free(cfg);
  std::fflush(stdout);
  return st == MPS_OK ? 0 : fail(st);
}
