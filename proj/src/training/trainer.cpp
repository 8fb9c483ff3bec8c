#include "training/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include "common/error.hpp"
#include "common/rng.hpp"

namespace mpstep::training {

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

nlohmann::json slot_steps(const Adam& opt) {
  auto j = nlohmann::json::object();
  for (const auto& [name, slot] : opt.slots()) j[name] = slot.step;
  return j;
}

void store_moments(surrogates::Checkpoint& ckpt, const Adam& opt, const std::string& prefix) {
  for (const auto& [name, slot] : opt.slots()) {
    ckpt.put(prefix + "m/" + name, {slot.m.size()}, slot.m);
    ckpt.put(prefix + "v/" + name, {slot.v.size()}, slot.v);
  }
}

void load_moments(const surrogates::Checkpoint& ckpt, Adam& opt, const std::string& prefix,
                  const nlohmann::json& steps) {
  opt.clear();
  for (const auto& [name, step] : steps.items()) {
    const auto* m = ckpt.find(prefix + "m/" + name);
    const auto* v = ckpt.find(prefix + "v/" + name);
    if (m == nullptr || v == nullptr) throw FormatError("checkpoint lacks optimizer moments for '" + name + "'");
    opt.slots()[name] = AdamSlot{m->values, v->values, step.get<std::size_t>()};
  }
}

}  // namespace

void TrainConfig::validate() const {
  loss.validate();
  optimizer.validate();
  delta_optimizer.validate();
  if (loss.mode == LossMode::Mp) {
    mp.validate();
    if (curriculum) curriculum->validate();
  }
  if (epochs < 1) throw ConfigError("epochs must be >= 1");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (checkpoint_every < 1) throw ConfigError("checkpoint_every must be >= 1");
}

nlohmann::json TrainConfig::to_json() const {
  nlohmann::json j = {{"loss", loss.to_json()},
                      {"mp", mp.to_json()},
                      {"optimizer", optimizer.to_json()},
                      {"delta_optimizer", delta_optimizer.to_json()},
                      {"epochs", epochs},
                      {"batch_size", batch_size},
                      {"window_stride", window_stride},
                      {"seed", seed},
                      {"deterministic", deterministic},
                      {"checkpoint_every", checkpoint_every}};
  j["curriculum"] = curriculum ? curriculum->to_json() : nlohmann::json(nullptr);
  return j;
}

TrainConfig TrainConfig::from_json(const nlohmann::json& j) {
  TrainConfig c;
  c.loss = LossConfig::from_json(j.at("loss"));
  c.mp = MPConfig::from_json(j.at("mp"));
  if (!j.at("curriculum").is_null()) c.curriculum = CurriculumSchedule::from_json(j.at("curriculum"));
  c.optimizer = AdamConfig::from_json(j.at("optimizer"));
  c.delta_optimizer = AdamConfig::from_json(j.at("delta_optimizer"));
  c.epochs = j.at("epochs").get<std::size_t>();
  c.batch_size = j.at("batch_size").get<std::size_t>();
  c.window_stride = j.at("window_stride").get<std::size_t>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.deterministic = j.at("deterministic").get<bool>();
  c.checkpoint_every = j.at("checkpoint_every").get<std::size_t>();
  return c;
}

std::string EpochLog::csv_header() {
  return "epoch,mode,n_or_sr,mu,r,s,loss_total,loss_gt,loss_p,mean_delta_norm,grad_norm,lr,seconds";
}

std::string EpochLog::csv_row() const {
  std::ostringstream os;
  os << epoch << ',' << to_string(mode) << ',' << n_or_sr << ',' << fmt(mu) << ',' << r << ',' << s << ','
     << fmt(loss_total) << ',' << fmt(loss_gt) << ',' << fmt(loss_p) << ',' << fmt(mean_delta_norm) << ','
     << fmt(grad_norm) << ',' << fmt(lr) << ',' << fmt(seconds);
  return os.str();
}

std::vector<WindowRef> make_windows(const systems::TrajectoryDataset& ds, std::size_t length, std::size_t stride) {
  if (length < 2) throw ConfigError("windows need at least two states");
  if (stride < 1) throw ConfigError("window stride must be >= 1");
  std::vector<WindowRef> out;
  for (std::size_t traj : ds.trajectories(systems::Split::Train)) {
    for (std::size_t start = 0; start + length <= ds.n_steps; start += stride) out.push_back({traj, start});
  }
  return out;
}

Window gather_window(const systems::TrajectoryDataset& ds, const std::vector<WindowRef>& refs, std::size_t length) {
  const std::size_t size = ds.state_size();
  ad::Shape shape{refs.size()};
  shape.insert(shape.end(), ds.state_shape.begin(), ds.state_shape.end());
  Window window;
  window.reserve(length);
  for (std::size_t t = 0; t < length; ++t) {
    std::vector<double> values(refs.size() * size);
    for (std::size_t b = 0; b < refs.size(); ++b) {
      const auto s = ds.state(refs[b].trajectory, refs[b].start + t);
      std::copy(s.begin(), s.end(), values.begin() + static_cast<std::ptrdiff_t>(b * size));
    }
    window.push_back(ad::Tensor::from(shape, std::move(values)));
  }
  return window;
}

Trainer::Trainer(const systems::TrajectoryDataset& dataset, surrogates::Surrogate& model, TrainConfig config)
    : dataset_(dataset),
      model_(model),
      config_(std::move(config)),
      theta_opt_(config_.optimizer),
      delta_opt_(config_.delta_optimizer),
      bank_(dataset.state_shape),
      mp_(config_.mp) {
  config_.validate();
  if (dataset_.state_shape != model_.state_shape()) {
    throw ConfigError("dataset state shape " + ad::to_string(dataset_.state_shape) +
                      " does not match surrogate state shape " + ad::to_string(model_.state_shape()));
  }
  std::size_t longest = 0;
  switch (config_.loss.mode) {
    case LossMode::OneStep: longest = 1; break;
    case LossMode::MultiRollout: longest = config_.loss.n_rollouts; break;
    case LossMode::Mp:
      longest = config_.curriculum ? config_.curriculum->max_r() * config_.curriculum->max_s() : mp_.r * mp_.s;
      break;
  }
  if (longest + 1 > dataset_.n_steps) {
    throw ConfigError("training needs windows of " + std::to_string(longest + 1) + " states but trajectories hold " +
                      std::to_string(dataset_.n_steps));
  }
  if (dataset_.trajectories(systems::Split::Train).empty()) throw ConfigError("dataset has no train trajectories");
  if (config_.loss.mode == LossMode::Mp && config_.curriculum) {
    curriculum_ = initial_curriculum(*config_.curriculum);
    mp_.r = curriculum_.r;
    mp_.s = curriculum_.s;
    mp_.mu = curriculum_.mu;
  }
  rebuild_windows();
}

std::size_t Trainer::window_length() const {
  switch (config_.loss.mode) {
    case LossMode::OneStep: return 2;
    case LossMode::MultiRollout: return config_.loss.n_rollouts + 1;
    case LossMode::Mp: return mp_.r * mp_.s + 1;
  }
  return 2;
}

void Trainer::rebuild_windows() {
  const std::size_t length = window_length();
  const std::size_t stride = config_.window_stride > 0 ? config_.window_stride : length - 1;
  windows_ = make_windows(dataset_, length, stride);
}

void Trainer::prepare_epoch() {
  if (config_.loss.mode != LossMode::Mp || !config_.curriculum) return;
  const std::size_t r = curriculum_.r, s = curriculum_.s;
  mp_ = curriculum_step(*config_.curriculum, epoch_, curriculum_, bank_, config_.mp, last_gt_);
  if (mp_.r != r || mp_.s != s) {
    delta_opt_.clear();
    rebuild_windows();
  }
}

EpochLog Trainer::run_epoch() {
  const auto started = std::chrono::steady_clock::now();
  prepare_epoch();
  const std::size_t length = window_length();

  std::vector<std::size_t> order(windows_.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng(derive_seed(config_.seed, epoch_));
  std::shuffle(order.begin(), order.end(), rng);

  auto theta = model_.parameters();
  double sum_total = 0.0, sum_gt = 0.0, sum_p = 0.0, sum_norm = 0.0;
  std::size_t batches = 0;
  for (std::size_t first = 0; first < order.size(); first += config_.batch_size) {
    const std::size_t last = std::min(first + config_.batch_size, order.size());
    std::vector<WindowRef> refs;
    std::vector<std::size_t> ids;
    for (std::size_t i = first; i < last; ++i) {
      refs.push_back(windows_[order[i]]);
      ids.push_back(order[i]);
    }
    const Window window = gather_window(dataset_, refs, length);
    for (auto& p : theta) p.tensor.zero_grad();

    ad::Tensor total, gt, penalty;
    std::vector<surrogates::NamedParameter> deltas;
    switch (config_.loss.mode) {
      case LossMode::OneStep: total = loss_one_step(model_, window, config_.loss); break;
      case LossMode::MultiRollout: total = loss_multi_rollout(model_, window, config_.loss); break;
      case LossMode::Mp: {
        deltas = bank_.parameters(ids, mp_.s);
        for (auto& d : deltas) d.tensor.zero_grad();
        auto l = loss_mp(model_, window, config_.loss, mp_, bank_, ids);
        total = l.total;
        gt = l.gt;
        penalty = l.penalty;
        break;
      }
    }
    if (!std::isfinite(total.item())) {
      throw NumericalError("non-finite loss at epoch " + std::to_string(epoch_));
    }
    ad::backward(total);
    sum_norm += theta_opt_.step(theta);
    if (!deltas.empty()) delta_opt_.step(deltas);
    sum_total += total.item();
    sum_gt += config_.loss.mode == LossMode::Mp ? gt.item() : total.item();
    sum_p += config_.loss.mode == LossMode::Mp ? penalty.item() : 0.0;
    ++batches;
  }

  EpochLog row;
  row.epoch = epoch_;
  row.mode = config_.loss.mode;
  const double n = static_cast<double>(std::max<std::size_t>(batches, 1));
  row.loss_total = sum_total / n;
  row.loss_gt = sum_gt / n;
  row.loss_p = sum_p / n;
  row.grad_norm = sum_norm / n;
  row.lr = config_.optimizer.lr;
  switch (config_.loss.mode) {
    case LossMode::OneStep: row.n_or_sr = 1; break;
    case LossMode::MultiRollout: row.n_or_sr = config_.loss.n_rollouts; break;
    case LossMode::Mp:
      row.n_or_sr = mp_.r * mp_.s;
      row.mu = mp_.mu;
      row.r = mp_.r;
      row.s = mp_.s;
      row.mean_delta_norm = bank_.mean_norm();
      break;
  }
  row.seconds = config_.deterministic
                    ? 0.0
                    : std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  last_gt_ = row.loss_gt;
  ++epoch_;
  return row;
}

void Trainer::write_log_row(const EpochLog& row, bool truncate) const {
  if (config_.log_path.empty()) return;
  if (truncate) {
    std::vector<std::string> kept;
    std::ifstream in(config_.log_path);
    std::string line;
    while (in && std::getline(in, line)) {
      if (line.empty() || line == EpochLog::csv_header()) continue;
      const std::size_t e = std::stoul(line.substr(0, line.find(',')));
      if (e < row.epoch) kept.push_back(line);
    }
    if (!config_.log_path.parent_path().empty()) std::filesystem::create_directories(config_.log_path.parent_path());
    std::ofstream out(config_.log_path, std::ios::trunc);
    if (!out) throw IoError("cannot write training log " + config_.log_path.string());
    out << EpochLog::csv_header() << '\n';
    for (const auto& k : kept) out << k << '\n';
  }
  std::ofstream out(config_.log_path, std::ios::app);
  if (!out) throw IoError("cannot write training log " + config_.log_path.string());
  out << row.csv_row() << '\n';
}

std::vector<EpochLog> Trainer::run(const std::function<void(const EpochLog&)>& on_epoch) {
  std::vector<EpochLog> rows;
  bool first = true;
  while (epoch_ < config_.epochs) {
    const EpochLog row = run_epoch();
    write_log_row(row, first);
    first = false;
    rows.push_back(row);
    if (on_epoch) on_epoch(row);
    if (!config_.checkpoint_path.empty() && (epoch_ % config_.checkpoint_every == 0 || epoch_ == config_.epochs)) {
      surrogates::save_checkpoint(checkpoint(), config_.checkpoint_path);
    }
  }
  return rows;
}

surrogates::Checkpoint Trainer::checkpoint() const {
  auto ckpt = surrogates::make_checkpoint(model_);
  ckpt.step = theta_opt_.steps_taken();
  ckpt.training = {{"next_epoch", epoch_},
                   {"last_gt", last_gt_},
                   {"mode", to_string(config_.loss.mode)},
                   {"mp", mp_.to_json()},
                   {"curriculum", curriculum_.to_json()},
                   {"optimizer_steps", slot_steps(theta_opt_)},
                   {"delta_optimizer_steps", slot_steps(delta_opt_)},
                   {"delta_optimizer_total", delta_opt_.steps_taken()},
                   {"train_config", config_.to_json()}};
  store_moments(ckpt, theta_opt_, "adam/");
  store_moments(ckpt, delta_opt_, "delta_adam/");
  for (const auto& [key, delta] : bank_.entries()) {
    const auto v = delta.values();
    ckpt.put("delta/" + DiscontinuityBank::slot_name(key.first, key.second), delta.shape(),
             std::vector<double>(v.begin(), v.end()));
  }
  return ckpt;
}

void Trainer::restore(const surrogates::Checkpoint& ckpt) {
  surrogates::load_parameters(model_, ckpt);
  try {
    const auto& t = ckpt.training;
    if (t.at("mode").get<std::string>() != to_string(config_.loss.mode)) {
      throw ConfigError("checkpoint was trained in mode '" + t.at("mode").get<std::string>() + "', config says '" +
                        to_string(config_.loss.mode) + "'");
    }
    epoch_ = t.at("next_epoch").get<std::size_t>();
    last_gt_ = t.at("last_gt").get<double>();
    mp_ = MPConfig::from_json(t.at("mp"));
    curriculum_ = CurriculumState::from_json(t.at("curriculum"));
    load_moments(ckpt, theta_opt_, "adam/", t.at("optimizer_steps"));
    theta_opt_.set_steps_taken(ckpt.step);
    load_moments(ckpt, delta_opt_, "delta_adam/", t.at("delta_optimizer_steps"));
    delta_opt_.set_steps_taken(t.at("delta_optimizer_total").get<std::size_t>());
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("checkpoint lacks training state: ") + e.what());
  }
  bank_.reset();
  const std::string prefix = "delta/";
  for (const auto& a : ckpt.arrays) {
    if (a.name.rfind(prefix, 0) != 0) continue;
    const auto rest = a.name.substr(prefix.size());
    const auto slash = rest.find('/');
    bank_.set(std::stoul(rest.substr(0, slash)), std::stoul(rest.substr(slash + 1)), a.values);
  }
  rebuild_windows();
}

}  // namespace mpstep::training
