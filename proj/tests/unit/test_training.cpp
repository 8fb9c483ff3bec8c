#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "autodiff/ops.hpp"
#include "common/error.hpp"
#include "support/finite_difference.hpp"
#include "support/fixtures.hpp"
#include "support/mp_oracle.hpp"
#include "surrogates/mlp.hpp"
#include "training/adam.hpp"
#include "training/curriculum.hpp"
#include "training/losses.hpp"
#include "training/trainer.hpp"

using namespace mpstep;
using namespace mpstep::training;

namespace {

// F(q) = theta * q on a scalar state.
class ScalarGain final : public surrogates::Surrogate {
 public:
  explicit ScalarGain(double theta) : theta_(ad::Tensor::parameter({1}, {theta})) {}
  std::string architecture() const override { return "scalar_gain"; }
  const ad::Shape& state_shape() const override { return shape_; }
  ad::Tensor forward(const ad::Tensor& q) const override { return q * theta_; }
  std::vector<surrogates::NamedParameter> parameters() const override { return {{"theta", theta_}}; }
  const systems::Normalization& normalization() const override { return norm_; }
  ad::Tensor theta_;

 private:
  ad::Shape shape_{1};
  systems::Normalization norm_{{0.0}, {1.0}};
};

std::filesystem::path temp_path(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / "mpstep_tests";
  std::filesystem::create_directories(dir);
  return dir / name;
}

Window scalar_window(std::initializer_list<double> values) {
  Window w;
  for (double v : values) w.push_back(ad::Tensor::from({1, 1}, {v}));
  return w;
}

using testsupport::random_window;
using testsupport::randomize_bank;
using testsupport::tiny_mlp;

systems::TrajectoryDataset lorenz_dataset(std::size_t n_traj, std::size_t n_steps, std::uint64_t seed) {
  return systems::generate_dataset(systems::SystemSpec::lorenz63(), n_traj, n_steps, seed);
}

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("one-step loss hand example") {
  ScalarGain model(1.0);
  LossConfig cfg;
  const auto loss = loss_one_step(model, scalar_window({2.0, 6.0}), cfg);
  CHECK(loss.item() == doctest::Approx(16.0).epsilon(1e-15));
  ad::backward(loss);
  CHECK(model.theta_.grad()[0] == doctest::Approx(-16.0).epsilon(1e-15));

  surrogates::MlpSurrogate identity({8, 1, surrogates::Activation::Tanh}, {3}, {{0, 0, 0}, {1, 1, 1}}, 1);
  const auto w = random_window(1, 4, 3, 2);
  CHECK(loss_one_step(identity, {w[0], w[0]}, cfg).item() == 0.0);
  CHECK_THROWS_AS(loss_one_step(model, scalar_window({2.0}), cfg), ShapeError);
}

TEST_CASE("multi-rollout loss hand example") {
  ScalarGain model(1.0);
  LossConfig cfg{LossMode::MultiRollout, 2, 0.5, false, LossNorm::Mse};
  // Identity model from q0 = 0: errors (0-2)^2 = 4 and (0-sqrt 8)^2 = 8.
  const auto loss = loss_multi_rollout(model, scalar_window({0.0, 2.0, -std::sqrt(8.0)}), cfg);
  CHECK(loss.item() == doctest::Approx(8.0).epsilon(1e-14));
  CHECK_THROWS_AS(loss_multi_rollout(model, scalar_window({0.0, 2.0}), cfg), ShapeError);
}

TEST_CASE("perfect model on its own trajectory has zero multi-rollout loss") {
  ScalarGain model(0.5);
  for (double gamma : {1.0, 0.3}) {
    LossConfig cfg{LossMode::MultiRollout, 3, gamma, false, LossNorm::SumSq};
    CHECK(loss_multi_rollout(model, scalar_window({8.0, 4.0, 2.0, 1.0}), cfg).item() == 0.0);
  }
}

TEST_CASE("multi-step penalty loss hand example") {
  ScalarGain model(1.0);
  DiscontinuityBank bank({1});
  bank.get(0, 1).mutable_values()[0] = 0.5;
  LossConfig cfg{LossMode::Mp, 1, 1.0, false, LossNorm::Mse};
  MPConfig mp{1, 2, 0.1, PenaltyNorm::L2Sq};
  const auto l = loss_mp(model, scalar_window({1.0, 2.0, 4.0}), cfg, mp, bank, {0});
  CHECK(l.gt.item() == doctest::Approx(7.25).epsilon(1e-15));
  CHECK(l.penalty.item() == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(l.total.item() == doctest::Approx(7.275).epsilon(1e-15));
  CHECK(bank.size() == 2);
  CHECK(bank.get(0, 2).values()[0] == 0.0);
  ad::backward(l.total);
  CHECK(bank.get(0, 1).grad()[0] == doctest::Approx(-4.9).epsilon(1e-14));
  CHECK(bank.get(0, 2).grad()[0] == 0.0);

  // Finite-difference cross-check of dL/d delta_1.
  auto delta = bank.get(0, 1);
  const auto fd = testsupport::central_differences(
      [&] { return loss_mp(model, scalar_window({1.0, 2.0, 4.0}), cfg, mp, bank, {0}).total.item(); }, delta);
  CHECK(fd[0] == doctest::Approx(-4.9).epsilon(1e-8));
}

TEST_CASE("all-zero discontinuities and an exact model give zero loss") {
  ScalarGain model(2.0);
  DiscontinuityBank bank({1});
  LossConfig cfg{LossMode::Mp, 1, 1.0, false, LossNorm::Mse};
  const auto l = loss_mp(model, scalar_window({1, 2, 4, 8, 16, 32, 64}), cfg, {2, 3, 1e-2, PenaltyNorm::L2}, bank, {5});
  CHECK(l.total.item() == 0.0);
  CHECK(bank.size() == 3);
}

TEST_CASE("reduction identity: one split equals the multi-rollout loss") {
  const auto model = tiny_mlp(3, 4);
  for (std::size_t r : {1u, 2u, 3u, 7u}) {
    for (double gamma : {1.0, 0.6}) {
      const auto w = random_window(r + 1, 3, 3, 10 + r);
      LossConfig cfg{LossMode::MultiRollout, r, gamma, false, LossNorm::Mse};
      DiscontinuityBank bank({3});
      const auto mp = loss_mp(model, w, cfg, {r, 1, 0.37, PenaltyNorm::L2Sq}, bank, {0, 1, 2});
      const auto mr = loss_multi_rollout(model, w, cfg);
      CHECK(mp.gt.item() == mr.item());
      CHECK(mp.total.item() == mp.gt.item());
    }
  }
}

TEST_CASE("multi-step penalty gradients match finite differences") {
  std::uint64_t seed = 100;
  for (auto norm : {PenaltyNorm::L2Sq, PenaltyNorm::L2, PenaltyNorm::L1}) {
    for (std::size_t r = 1; r <= 3; ++r) {
      for (std::size_t s = 1; s <= 3; ++s) {
        CAPTURE(to_string(norm));
        CAPTURE(r);
        CAPTURE(s);
        ++seed;
        auto model = tiny_mlp(3, seed);
        const auto w = random_window(r * s + 1, 2, 3, seed);
        DiscontinuityBank bank({3});
        const std::vector<std::size_t> ids{4, 9};
        randomize_bank(bank, ids, s, seed);
        LossConfig cfg{LossMode::Mp, 1, 0.8, false, LossNorm::Mse};
        const MPConfig mp{r, s, 0.3, norm};
        CHECK(testsupport::mp_gradient_error(model, w, cfg, mp, bank, ids) < 1e-5);
        if (s == 1) {
          // A single segment has no detachment: the plain objective applies.
          auto leaves = model.parameter_tensors();
          for (auto& d : bank.parameters(ids, s)) leaves.push_back(d.tensor);
          CHECK(testsupport::max_gradient_error([&] { return loss_mp(model, w, cfg, mp, bank, ids).total; },
                                                leaves) < 1e-5);
        }
      }
    }
  }
}

TEST_CASE("multi-rollout gradients match finite differences with and without pushforward") {
  auto model = tiny_mlp(2, 7);
  const auto w = random_window(4, 3, 2, 7);
  LossConfig full{LossMode::MultiRollout, 3, 0.7, false, LossNorm::SumSq};
  LossConfig pf = full;
  pf.pushforward = true;
  CHECK(loss_multi_rollout(model, w, full).item() == loss_multi_rollout(model, w, pf).item());

  auto leaves = model.parameter_tensors();
  CHECK(testsupport::max_gradient_error([&] { return loss_multi_rollout(model, w, full); }, leaves) < 1e-5);

  // Truncated objective: the inputs of steps t > 1 are frozen at the current
  // predictions, so only the final application in each term sees theta.
  std::vector<ad::Tensor> frozen{w[0]};
  {
    ad::NoGradGuard guard;
    for (std::size_t t = 1; t < 3; ++t) frozen.push_back(ad::detach(model.forward(frozen.back())));
  }
  auto truncated = [&] {
    ad::Tensor total = mismatch(model.forward(frozen[0]), w[1], pf.norm);
    for (std::size_t t = 2; t <= 3; ++t) total = total + mismatch(model.forward(frozen[t - 1]), w[t], pf.norm) * pf.lambda(t);
    return total;
  };
  for (auto& l : leaves) l.zero_grad();
  ad::backward(loss_multi_rollout(model, w, pf));
  std::vector<std::vector<double>> analytic;
  for (auto& l : leaves) analytic.push_back(l.grad());
  double worst = 0.0, differs = 0.0;
  for (std::size_t i = 0; i < leaves.size(); ++i) {
    const auto fd = testsupport::central_differences([&] { return truncated().item(); }, leaves[i]);
    worst = std::max(worst, testsupport::relative_error(analytic[i], fd));
  }
  for (auto& l : leaves) l.zero_grad();
  ad::backward(loss_multi_rollout(model, w, full));
  for (std::size_t i = 0; i < leaves.size(); ++i) differs = std::max(differs, testsupport::relative_error(analytic[i], leaves[i].grad()));
  CHECK(worst < 1e-5);
  CHECK(differs > 1e-3);
}

TEST_CASE("theta gradients do not flow across segment boundaries") {
  auto model = tiny_mlp(3, 21);
  const std::size_t r = 2, s = 3;
  const auto w = random_window(r * s + 1, 2, 3, 21);
  DiscontinuityBank bank({3});
  const std::vector<std::size_t> ids{0, 1};
  randomize_bank(bank, ids, s, 21);
  LossConfig cfg{LossMode::Mp, 1, 1.0, false, LossNorm::Mse};
  const MPConfig mp{r, s, 0.1, PenaltyNorm::L2Sq};

  // Segment entry points computed once and frozen.
  std::vector<ad::Tensor> entries{w[0]};
  {
    ad::NoGradGuard guard;
    ad::Tensor q = w[0];
    for (std::size_t k = 1; k < s; ++k) {
      for (std::size_t j = 0; j < r; ++j) q = model.forward(q);
      std::vector<ad::Tensor> rows;
      for (std::size_t id : ids) rows.push_back(bank.get(id, k));
      q = ad::detach(q + ad::detach(ad::stack(rows)));
      entries.push_back(q);
    }
  }
  auto per_segment = [&] {
    ad::Tensor total;
    bool empty = true;
    for (std::size_t k = 0; k < s; ++k) {
      ad::Tensor q = entries[k];
      for (std::size_t j = 1; j <= r; ++j) {
        q = model.forward(q);
        const auto term = mismatch(q, w[k * r + j], cfg.norm);
        total = empty ? term : total + term;
        empty = false;
      }
    }
    return total;
  };
  auto leaves = model.parameter_tensors();
  for (auto& l : leaves) l.zero_grad();
  ad::backward(loss_mp(model, w, cfg, mp, bank, ids).gt);
  for (auto& l : leaves) {
    const auto fd = testsupport::central_differences([&] { return per_segment().item(); }, l);
    CHECK(testsupport::relative_error(l.grad(), fd) < 1e-6);
  }
}

TEST_CASE("penalty strength enters linearly") {
  auto model = tiny_mlp(3, 31);
  const auto w = random_window(5, 2, 3, 31);
  DiscontinuityBank bank({3});
  randomize_bank(bank, {0, 1}, 2, 31);
  LossConfig cfg{LossMode::Mp, 1, 1.0, false, LossNorm::Mse};
  for (auto norm : {PenaltyNorm::L2Sq, PenaltyNorm::L2, PenaltyNorm::L1}) {
    const auto a = loss_mp(model, w, cfg, {2, 2, 0.01, norm}, bank, {0, 1});
    const auto b = loss_mp(model, w, cfg, {2, 2, 0.5, norm}, bank, {0, 1});
    CHECK(b.total.item() - a.total.item() == doctest::Approx(0.49 * a.penalty.item()).epsilon(1e-12));
    CHECK(b.total.item() >= a.total.item());
    CHECK(a.penalty.item() > 0.0);
  }
}

TEST_CASE("curriculum schedule") {
  CurriculumSchedule sched;
  sched.mu_init = 1e-5;
  sched.mu_growth = 10.0;
  sched.mu_update_every = 5;
  sched.mu_max = 1e-2;
  sched.r_schedule = {{4, 2}, {8, 5}};
  sched.s_schedule = {{6, 3}};
  CHECK(interval_mu(sched, 10) == doctest::Approx(1e-3).epsilon(1e-14));
  CHECK(interval_mu(sched, 4) == doctest::Approx(1e-5).epsilon(1e-14));
  for (std::size_t e = 0; e < 200; e += 7) CHECK(interval_mu(sched, e) <= sched.mu_max);
  CHECK(interval_mu(sched, 100) == sched.mu_max);

  DiscontinuityBank bank({3});
  auto state = initial_curriculum(sched);
  const MPConfig base;
  auto mp = curriculum_step(sched, 0, state, bank, base);
  CHECK(mp.r == 1);
  CHECK(mp.s == 1);
  bank.get(0, 1);
  mp = curriculum_step(sched, 3, state, bank, base);
  CHECK(bank.size() == 1);
  mp = curriculum_step(sched, 4, state, bank, base);
  CHECK(mp.r == 2);
  CHECK(mp.s == 1);
  CHECK(bank.size() == 0);
  bank.get(0, 1);
  mp = curriculum_step(sched, 6, state, bank, base);
  CHECK(mp.s == 3);
  CHECK(bank.size() == 0);
  mp = curriculum_step(sched, 10, state, bank, base);
  CHECK(mp.r == 5);
  CHECK(mp.mu == doctest::Approx(1e-3).epsilon(1e-14));

  CurriculumSchedule bad = sched;
  bad.r_schedule = {{4, 2}, {4, 3}};
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = sched;
  bad.mu_growth = 1.0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("plateau trigger grows mu only when the loss stalls") {
  CurriculumSchedule sched;
  sched.trigger = MuTrigger::Plateau;
  sched.mu_update_every = 2;
  DiscontinuityBank bank({3});
  auto state = initial_curriculum(sched);
  curriculum_step(sched, 0, state, bank, {});
  curriculum_step(sched, 1, state, bank, {}, 10.0);
  curriculum_step(sched, 2, state, bank, {}, 9.0);
  curriculum_step(sched, 3, state, bank, {}, 8.995);
  CHECK(state.mu == doctest::Approx(1e-5));
  curriculum_step(sched, 4, state, bank, {}, 8.99);
  CHECK(state.mu == doctest::Approx(1e-4));
  curriculum_step(sched, 5, state, bank, {}, 1.0);
  curriculum_step(sched, 6, state, bank, {}, 0.5);
  CHECK(state.mu == doctest::Approx(1e-4));
}

TEST_CASE("adam update examples") {
  auto p = ad::Tensor::parameter({1}, {0.5});
  Adam opt({1e-3, 0.9, 0.999, 1e-8, 0.0});
  std::vector<surrogates::NamedParameter> params{{"p", p}};
  opt.step(params);
  CHECK(p.values()[0] == 0.5);

  Adam fresh({1e-3, 0.9, 0.999, 1e-8, 0.0});
  ad::backward(ad::sum(p));
  fresh.step(params);
  CHECK(p.values()[0] - 0.5 == doctest::Approx(-1e-3).epsilon(1e-6));

  auto q = ad::Tensor::parameter({2}, {0.0, 0.0});
  Adam clipped({1e-3, 0.9, 0.999, 1e-8, 1.0});
  ad::backward(ad::sum(q * ad::Tensor::from({2}, {6.0, 8.0})));
  std::vector<surrogates::NamedParameter> qp{{"q", q}};
  CHECK(clipped.step(qp) == doctest::Approx(10.0));
  CHECK(clipped.slots().at("q").m[0] == doctest::Approx(0.1 * 0.6).epsilon(1e-14));
  CHECK(clipped.slots().at("q").m[1] == doctest::Approx(0.1 * 0.8).epsilon(1e-14));

  auto bad = ad::Tensor::parameter({1}, {1.0});
  ad::backward(ad::sum(bad / ad::Tensor::from({1}, {0.0})));
  std::vector<surrogates::NamedParameter> bp{{"broken", bad}};
  try {
    opt.step(bp);
    FAIL("expected NumericalError");
  } catch (const NumericalError& e) {
    CHECK(std::string(e.what()).find("broken") != std::string::npos);
  }
  CHECK(bad.values()[0] == 1.0);
}

TEST_CASE("discontinuity bank creates zero entries lazily") {
  DiscontinuityBank bank({1, 4, 4});
  CHECK(bank.size() == 0);
  CHECK(bank.mean_norm() == 0.0);
  auto& d = bank.get(3, 2);
  CHECK(d.shape() == ad::Shape{1, 4, 4});
  CHECK(d.requires_grad());
  for (double v : d.values()) CHECK(v == 0.0);
  bank.get(3, 1).mutable_values()[0] = 3.0;
  bank.get(3, 2).mutable_values()[5] = 4.0;
  CHECK(bank.size() == 2);
  CHECK(bank.mean_norm() == doctest::Approx(3.5));
  CHECK_THROWS_AS(bank.get(0, 0), ConfigError);
}

TEST_CASE("one-step training loss decreases over the first epochs") {
  const auto ds = lorenz_dataset(10, 200, 5);
  surrogates::MlpSurrogate model({}, {3}, ds.normalization, 1);
  TrainConfig cfg;
  cfg.epochs = 10;
  cfg.batch_size = 32;
  cfg.seed = 3;
  Trainer trainer(ds, model, cfg);
  const auto log = trainer.run();
  REQUIRE(log.size() == 10);
  for (std::size_t e = 1; e < log.size(); ++e) CHECK(log[e].loss_total < log[e - 1].loss_total);
}

TEST_CASE("mp training shrinks discontinuities as mu grows") {
  const auto ds = lorenz_dataset(10, 201, 6);
  surrogates::MlpSurrogate model({32, 2, surrogates::Activation::Tanh}, {3}, ds.normalization, 2);
  TrainConfig cfg;
  cfg.loss.mode = LossMode::Mp;
  cfg.mp = {2, 5, 1e-5, PenaltyNorm::L2Sq};
  CurriculumSchedule sched;
  sched.mu_init = 1e-5;
  sched.mu_growth = 10.0;
  sched.mu_update_every = 4;
  sched.mu_max = 1e4;
  sched.r_schedule = {{0, 2}};
  sched.s_schedule = {{0, 5}};
  cfg.curriculum = sched;
  cfg.epochs = 48;
  cfg.batch_size = 8;
  cfg.seed = 4;
  cfg.deterministic = true;
  Trainer trainer(ds, model, cfg);
  const auto log = trainer.run();
  // Mean |delta| at the end of each mu level; the tail starts once the
  // penalty outweighs the mismatch gradient (mu >= 100 here).
  std::vector<double> level_end;
  for (std::size_t e = 3; e < log.size(); e += 4) level_end.push_back(log[e].mean_delta_norm);
  CHECK(level_end.front() > 0.0);
  CHECK(level_end[1] > level_end[0]);
  for (std::size_t i = 8; i < level_end.size(); ++i) CHECK(level_end[i] < level_end[i - 1]);
}

TEST_CASE("training is deterministic and resumes exactly") {
  const auto ds = lorenz_dataset(6, 61, 9);
  TrainConfig cfg;
  cfg.loss.mode = LossMode::Mp;
  CurriculumSchedule sched;
  sched.mu_update_every = 2;
  sched.r_schedule = {{2, 2}};
  sched.s_schedule = {{3, 3}};
  cfg.curriculum = sched;
  cfg.epochs = 6;
  cfg.batch_size = 4;
  cfg.seed = 11;
  cfg.deterministic = true;

  auto run = [&](const std::string& tag, std::optional<std::size_t> stop_after) {
    surrogates::MlpSurrogate model({16, 2, surrogates::Activation::Tanh}, {3}, ds.normalization, 5);
    TrainConfig c = cfg;
    c.log_path = temp_path(tag + ".csv");
    c.checkpoint_path = temp_path(tag + ".mpck");
    std::filesystem::remove(c.log_path);
    if (stop_after) {
      TrainConfig first = c;
      first.epochs = *stop_after;
      Trainer(ds, model, first).run();
      surrogates::MlpSurrogate fresh({16, 2, surrogates::Activation::Tanh}, {3}, ds.normalization, 99);
      Trainer resumed(ds, fresh, c);
      resumed.restore(surrogates::load_checkpoint(c.checkpoint_path));
      CHECK(resumed.next_epoch() == *stop_after);
      resumed.run();
      return std::make_pair(read_file(c.log_path), make_checkpoint(fresh));
    }
    Trainer(ds, model, c).run();
    return std::make_pair(read_file(c.log_path), make_checkpoint(model));
  };
  const auto a = run("det_a", std::nullopt);
  const auto b = run("det_b", std::nullopt);
  const auto c = run("det_c", 4);
  CHECK(a.first == b.first);
  CHECK(a.first == c.first);
  CHECK(a.first.find("epoch,mode,n_or_sr,mu,r,s,loss_total") == 0);
  for (std::size_t i = 0; i < a.second.arrays.size(); ++i) {
    CHECK(a.second.arrays[i].values == c.second.arrays[i].values);
  }
}

TEST_CASE("training rejects bad setups and keeps the checkpoint on non-finite loss") {
  auto ds = lorenz_dataset(4, 30, 12);
  surrogates::MlpSurrogate wrong({8, 1, surrogates::Activation::Tanh}, {4}, {{0, 0, 0, 0}, {1, 1, 1, 1}}, 1);
  TrainConfig cfg;
  cfg.epochs = 1;
  CHECK_THROWS_AS(Trainer(ds, wrong, cfg), ConfigError);

  surrogates::MlpSurrogate model({8, 1, surrogates::Activation::Tanh}, {3}, ds.normalization, 1);
  TrainConfig longwin = cfg;
  longwin.loss = {LossMode::MultiRollout, 30, 1.0, false, LossNorm::Mse};
  CHECK_THROWS_AS(Trainer(ds, model, longwin), ConfigError);

  cfg.checkpoint_path = temp_path("nonfinite.mpck");
  Trainer(ds, model, cfg).run();
  const auto saved = read_file(cfg.checkpoint_path);
  auto poisoned = ds;
  for (auto& v : poisoned.states) v = std::nan("");
  TrainConfig more = cfg;
  more.epochs = 3;
  Trainer again(poisoned, model, more);
  again.restore(surrogates::load_checkpoint(cfg.checkpoint_path));
  CHECK_THROWS_AS(again.run(), NumericalError);
  CHECK(read_file(cfg.checkpoint_path) == saved);
}
