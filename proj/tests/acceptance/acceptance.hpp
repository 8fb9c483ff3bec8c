#pragma once

#include <filesystem>
#include <string>

namespace acceptance {

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Context {
  std::filesystem::path work;  // scratch and cached artifacts
  std::filesystem::path cli;   // command-line tool, for the pipeline check
};

Outcome gradient_oracles(const Context& ctx);
Outcome reduction_identity(const Context& ctx);
Outcome exploding_gradients(const Context& ctx);
Outcome penalty_annealing(const Context& ctx);
Outcome forecast_ordering(const Context& ctx);
Outcome spectrum_fidelity(const Context& ctx);
Outcome stability(const Context& ctx);
Outcome solver_verification(const Context& ctx);
Outcome determinism(const Context& ctx);

}  // namespace acceptance
