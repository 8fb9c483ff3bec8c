#include "surrogates/checkpoint.hpp"

#include <algorithm>

#include "common/container.hpp"
#include "common/error.hpp"
#include "surrogates/fno_lite.hpp"
#include "surrogates/mlp.hpp"
#include "surrogates/reference.hpp"

namespace mpstep::surrogates {

namespace {

const std::string kParamPrefix = "param/";

nlohmann::json normalization_json(const systems::Normalization& n) {
  return {{"mean", n.mean}, {"std", n.std}};
}

systems::Normalization normalization_from(const nlohmann::json& j) {
  systems::Normalization n;
  n.mean = j.at("mean").get<std::vector<double>>();
  n.std = j.at("std").get<std::vector<double>>();
  return n;
}

}  // namespace

const NamedArray* Checkpoint::find(const std::string& name) const {
  auto it = std::find_if(arrays.begin(), arrays.end(), [&](const NamedArray& a) { return a.name == name; });
  return it == arrays.end() ? nullptr : &*it;
}

void Checkpoint::put(std::string name, ad::Shape shape, std::vector<double> values) {
  if (ad::numel(shape) != values.size()) throw ShapeError("checkpoint array '" + name + "' size mismatch");
  for (auto& a : arrays) {
    if (a.name == name) {
      a.shape = std::move(shape);
      a.values = std::move(values);
      return;
    }
  }
  arrays.push_back({std::move(name), std::move(shape), std::move(values)});
}

std::unique_ptr<Surrogate> build_surrogate(const std::string& architecture, const nlohmann::json& config,
                                           const ad::Shape& state_shape,
                                           const systems::Normalization& normalization, std::uint64_t seed) {
  if (normalization.mean.size() != (state_shape.empty() ? 0 : state_shape[0]) ||
      normalization.std.size() != normalization.mean.size()) {
    throw ConfigError("normalization has " + std::to_string(normalization.mean.size()) +
                      " channels, state shape is " + ad::to_string(state_shape));
  }
  try {
    if (architecture == "mlp") {
      return std::make_unique<MlpSurrogate>(MlpConfig::from_json(config), state_shape, normalization, seed);
    }
    if (architecture == "fno_lite") {
      return std::make_unique<FnoLiteSurrogate>(SpectralLayerConfig::from_json(config), state_shape,
                                                normalization, seed);
    }
    if (architecture == "reference") {
      auto spec = systems::SystemSpec::from_json(config);
      if (spec.state_shape() != state_shape) throw ConfigError("reference surrogate state shape mismatch");
      return std::make_unique<ReferenceSurrogate>(std::move(spec), normalization);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("bad " + architecture + " configuration: " + e.what());
  }
  throw ConfigError("unknown architecture '" + architecture + "' (expected mlp, fno_lite or reference)");
}

Checkpoint make_checkpoint(const Surrogate& model) {
  Checkpoint c;
  c.architecture = model.architecture();
  c.config = model.config();
  c.state_shape = model.state_shape();
  c.normalization = model.normalization();
  for (const auto& p : model.parameters()) {
    const auto v = p.tensor.values();
    c.put(kParamPrefix + p.name, p.tensor.shape(), std::vector<double>(v.begin(), v.end()));
  }
  return c;
}

void load_parameters(Surrogate& model, const Checkpoint& ckpt) {
  if (ckpt.architecture != model.architecture()) {
    throw ConfigError("checkpoint architecture '" + ckpt.architecture + "' does not match model architecture '" +
                      model.architecture() + "'");
  }
  if (ckpt.config != model.config()) {
    throw ConfigError("checkpoint configuration " + ckpt.config.dump() + " does not match model configuration " +
                      model.config().dump());
  }
  if (ckpt.state_shape != model.state_shape()) {
    throw ConfigError("checkpoint state shape " + ad::to_string(ckpt.state_shape) + " does not match model " +
                      ad::to_string(model.state_shape()));
  }
  for (auto& p : model.parameters()) {
    const NamedArray* a = ckpt.find(kParamPrefix + p.name);
    if (a == nullptr) throw FormatError("checkpoint lacks parameter '" + p.name + "'");
    if (a->shape != p.tensor.shape()) {
      throw ConfigError("parameter '" + p.name + "' has shape " + ad::to_string(a->shape) + " in checkpoint, " +
                        ad::to_string(p.tensor.shape()) + " in model");
    }
    auto dst = p.tensor.mutable_values();
    std::copy(a->values.begin(), a->values.end(), dst.begin());
  }
}

std::unique_ptr<Surrogate> restore_surrogate(const Checkpoint& ckpt) {
  auto model = build_surrogate(ckpt.architecture, ckpt.config, ckpt.state_shape, ckpt.normalization, 0);
  load_parameters(*model, ckpt);
  return model;
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  nlohmann::json arrays = nlohmann::json::array();
  std::vector<double> payload;
  for (const auto& a : ckpt.arrays) {
    arrays.push_back({{"name", a.name}, {"shape", a.shape}, {"offset", payload.size()}});
    payload.insert(payload.end(), a.values.begin(), a.values.end());
  }
  nlohmann::json header = {
      {"architecture", ckpt.architecture},
      {"config", ckpt.config},
      {"state_shape", ckpt.state_shape},
      {"normalization", normalization_json(ckpt.normalization)},
      {"step", ckpt.step},
      {"training", ckpt.training},
      {"arrays", arrays},
      {"dtype", "float64-le"},
  };
  io::write_container(path, kCheckpointMagic, kCheckpointVersion, header, payload);
}

Checkpoint load_checkpoint(const std::filesystem::path& path, const std::optional<std::string>& expected_architecture) {
  const auto c = io::read_container(path, kCheckpointMagic, kCheckpointVersion);
  Checkpoint ckpt;
  std::size_t expected = 0;
  try {
    ckpt.architecture = c.header.at("architecture").get<std::string>();
    ckpt.config = c.header.at("config");
    ckpt.state_shape = c.header.at("state_shape").get<ad::Shape>();
    ckpt.normalization = normalization_from(c.header.at("normalization"));
    ckpt.step = c.header.at("step").get<std::uint64_t>();
    ckpt.training = c.header.at("training");
    for (const auto& a : c.header.at("arrays")) {
      NamedArray arr{a.at("name").get<std::string>(), a.at("shape").get<ad::Shape>(), {}};
      const auto offset = a.at("offset").get<std::size_t>();
      const auto n = ad::numel(arr.shape);
      if (offset != expected) throw FormatError("checkpoint array '" + arr.name + "' has a non-contiguous offset");
      expected += n;
      if (expected <= c.payload.size()) {
        arr.values.assign(c.payload.begin() + static_cast<std::ptrdiff_t>(offset),
                          c.payload.begin() + static_cast<std::ptrdiff_t>(offset + n));
      }
      ckpt.arrays.push_back(std::move(arr));
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path.string() + ": malformed checkpoint header: " + e.what());
  }
  io::check_payload_size(c, expected);
  if (expected_architecture && *expected_architecture != ckpt.architecture) {
    throw ConfigError(path.string() + ": checkpoint architecture '" + ckpt.architecture + "' does not match '" +
                      *expected_architecture + "'");
  }
  return ckpt;
}

}  // namespace mpstep::surrogates
