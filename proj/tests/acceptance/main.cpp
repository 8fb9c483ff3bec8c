// Acceptance suite. Usage: acceptance [--work DIR] [--cli PATH] [N ...]
// Without criterion numbers every criterion runs. Exit status is nonzero if
// any selected criterion fails.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <string>
#include <vector>

#include "acceptance/acceptance.hpp"

namespace {

struct Criterion {
  int id;
  const char* name;
  acceptance::Outcome (*run)(const acceptance::Context&);
};

const Criterion kCriteria[] = {
    {1, "gradient oracle suite", acceptance::gradient_oracles},
    {2, "reduction identity", acceptance::reduction_identity},
    {3, "exploding-gradient mitigation", acceptance::exploding_gradients},
    {4, "penalty annealing", acceptance::penalty_annealing},
    {5, "forecast-quality ordering", acceptance::forecast_ordering},
    {6, "spectrum fidelity", acceptance::spectrum_fidelity},
    {7, "stability", acceptance::stability},
    {8, "solver verification", acceptance::solver_verification},
    {9, "determinism", acceptance::determinism},
};

}  // namespace

int main(int argc, char** argv) {
  acceptance::Context ctx;
  ctx.work = std::filesystem::temp_directory_path() / "mpstep_acceptance";
#ifdef MPSTEP_CLI_PATH
  ctx.cli = MPSTEP_CLI_PATH;
#endif
  std::vector<int> selected;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--work" && i + 1 < argc) {
      ctx.work = argv[++i];
    } else if (arg == "--cli" && i + 1 < argc) {
      ctx.cli = argv[++i];
    } else {
      selected.push_back(std::atoi(arg.c_str()));
    }
  }
  std::filesystem::create_directories(ctx.work);

  int failures = 0;
  for (const auto& c : kCriteria) {
    bool chosen = selected.empty();
    for (int id : selected) chosen = chosen || id == c.id;
    if (!chosen) continue;
    const auto start = std::chrono::steady_clock::now();
    acceptance::Outcome out;
    try {
      out = c.run(ctx);
    } catch (const std::exception& e) {
      out = {false, std::string("exception: ") + e.what()};
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("criterion %d (%s): %s - %s [%.1f s]\n", c.id, c.name, out.pass ? "PASS" : "FAIL",
                out.detail.c_str(), seconds);
    std::fflush(stdout);
    failures += out.pass ? 0 : 1;
  }
  return failures == 0 ? 0 : 1;
}
