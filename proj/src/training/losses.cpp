#include "training/losses.hpp"

#include <array>
#include <cmath>

#include "autodiff/ops.hpp"
#include "common/error.hpp"

namespace mpstep::training {

namespace {

void require_length(const Window& window, std::size_t needed, const char* what) {
  if (window.size() < needed) {
    throw ShapeError(std::string(what) + " needs a window of " + std::to_string(needed) + " states, got " +
                     std::to_string(window.size()));
  }
}

// Running sum shared by the multi-rollout and segmented losses so that both
// accumulate in the same order.
void accumulate(ad::Tensor& total, bool& empty, const ad::Tensor& term, double weight) {
  const ad::Tensor weighted = weight == 1.0 ? term : term * weight;
  total = empty ? weighted : total + weighted;
  empty = false;
}

ad::Tensor penalty_term(const ad::Tensor& delta, PenaltyNorm norm) {
  std::vector<std::size_t> axes;
  for (std::size_t a = 1; a < delta.ndim(); ++a) axes.push_back(a);
  ad::Tensor per_window;
  switch (norm) {
    case PenaltyNorm::L2Sq: per_window = ad::reduce(ad::ReduceOp::SqNorm, delta, axes); break;
    case PenaltyNorm::L2: per_window = ad::sqrt(ad::reduce(ad::ReduceOp::SqNorm, delta, axes)); break;
    case PenaltyNorm::L1: per_window = ad::reduce(ad::ReduceOp::Sum, ad::abs(delta), axes); break;
  }
  return ad::mean(per_window);
}

}  // namespace

ad::Tensor mismatch(const ad::Tensor& prediction, const ad::Tensor& target, LossNorm norm) {
  const ad::Tensor err = ad::square(prediction - target);
  if (norm == LossNorm::Mse) return ad::mean(err);
  const double batch = prediction.ndim() > 0 ? static_cast<double>(prediction.shape()[0]) : 1.0;
  return batch == 1.0 ? ad::sum(err) : ad::sum(err) / batch;
}

ad::Tensor loss_one_step(const surrogates::Surrogate& model, const Window& window, const LossConfig& cfg) {
  require_length(window, 2, "one-step loss");
  return mismatch(model.forward(window[0]), window[1], cfg.norm);
}

ad::Tensor loss_multi_rollout(const surrogates::Surrogate& model, const Window& window, const LossConfig& cfg) {
  const std::size_t n = cfg.n_rollouts;
  require_length(window, n + 1, "multi-rollout loss");
  ad::Tensor total;
  bool empty = true;
  ad::Tensor q = window[0];
  for (std::size_t t = 1; t <= n; ++t) {
    if (cfg.pushforward && t > 1) q = ad::detach(q);
    q = model.forward(q);
    accumulate(total, empty, mismatch(q, window[t], cfg.norm), cfg.lambda(t));
  }
  return total;
}

MpLoss loss_mp(const surrogates::Surrogate& model, const Window& window, const LossConfig& cfg,
               const MPConfig& mp, DiscontinuityBank& bank, const std::vector<std::size_t>& window_ids) {
  require_length(window, mp.r * mp.s + 1, "multi-step penalty loss");
  const std::size_t batch = window[0].shape()[0];
  if (window_ids.size() != batch) throw ShapeError("loss_mp: one window id per batch row required");

  std::vector<ad::Tensor> deltas;
  for (std::size_t k = 1; k <= mp.s; ++k) {
    std::vector<ad::Tensor> rows;
    for (std::size_t w : window_ids) rows.push_back(bank.get(w, k));
    deltas.push_back(ad::stack(rows));
  }

  ad::Tensor gt;
  bool empty = true;
  ad::Tensor q = window[0];
  std::size_t t = 0;
  for (std::size_t k = 1; k <= mp.s; ++k) {
    for (std::size_t j = 1; j <= mp.r; ++j) {
      ++t;
      if (cfg.pushforward && j > 1) q = ad::detach(q);
      q = model.forward(q);
      accumulate(gt, empty, mismatch(q, window[t], cfg.norm), cfg.lambda(t));
    }
    if (!std::isfinite(gt.item())) {
      throw NumericalError("non-finite loss in segment " + std::to_string(k));
    }
    if (k < mp.s) q = ad::detach(q) + deltas[k - 1];
  }

  ad::Tensor penalty = penalty_term(deltas[0], mp.penalty_norm);
  for (std::size_t k = 2; k <= mp.s; ++k) penalty = penalty + penalty_term(deltas[k - 1], mp.penalty_norm);
  return {gt + penalty * mp.mu, gt, penalty};
}

}  // namespace mpstep::training
