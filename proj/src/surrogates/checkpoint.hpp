#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "surrogates/surrogate.hpp"

namespace mpstep::surrogates {

struct NamedArray {
  std::string name;
  ad::Shape shape;
  std::vector<double> values;
};

// Everything needed to rebuild a surrogate and resume its training. Parameter
// arrays are stored as "param/<name>"; training adds optimizer moments and
// the discontinuity bank under its own prefixes.
struct Checkpoint {
  std::string architecture;
  nlohmann::json config = nlohmann::json::object();
  ad::Shape state_shape;
  systems::Normalization normalization;
  std::uint64_t step = 0;
  nlohmann::json training = nlohmann::json::object();
  std::vector<NamedArray> arrays;

  const NamedArray* find(const std::string& name) const;
  void put(std::string name, ad::Shape shape, std::vector<double> values);
};

inline constexpr char kCheckpointMagic[] = "MPCK";
inline constexpr std::uint16_t kCheckpointVersion = 1;

std::unique_ptr<Surrogate> build_surrogate(const std::string& architecture, const nlohmann::json& config,
                                           const ad::Shape& state_shape,
                                           const systems::Normalization& normalization, std::uint64_t seed);

Checkpoint make_checkpoint(const Surrogate& model);
// Copies the checkpointed parameters into `model`. Throws ConfigError on an
// architecture, configuration or shape mismatch.
void load_parameters(Surrogate& model, const Checkpoint& ckpt);
std::unique_ptr<Surrogate> restore_surrogate(const Checkpoint& ckpt);

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
// With `expected_architecture` set, a checkpoint of another architecture is
// rejected with ConfigError.
Checkpoint load_checkpoint(const std::filesystem::path& path,
                           const std::optional<std::string>& expected_architecture = std::nullopt);

}  // namespace mpstep::surrogates
