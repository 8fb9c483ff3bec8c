#pragma once

#include <vector>

#include "autodiff/tensor.hpp"
#include "surrogates/surrogate.hpp"
#include "training/config.hpp"
#include "training/discontinuity_bank.hpp"

namespace mpstep::training {

// A batch of ground-truth windows: states[t] has shape [B, state...] and
// holds S^t(q_i) for every window in the batch.
using Window = std::vector<ad::Tensor>;

// Mismatch between a batched prediction and its target under `norm`,
// averaged over the batch.
ad::Tensor mismatch(const ad::Tensor& prediction, const ad::Tensor& target, LossNorm norm);

ad::Tensor loss_one_step(const surrogates::Surrogate& model, const Window& window, const LossConfig& cfg);

// sum_{t=1..n} lambda(t) |F^t(q) - S^t(q)|, n = cfg.n_rollouts.
ad::Tensor loss_multi_rollout(const surrogates::Surrogate& model, const Window& window, const LossConfig& cfg);

struct MpLoss {
  ad::Tensor total;
  ad::Tensor gt;
  ad::Tensor penalty;
};

// Segmented rollout with discontinuities from `bank`; window_ids[b] names the
// bank entries of batch row b. `cfg` supplies lambda, the mismatch norm and
// the optional pushforward inside segments.
MpLoss loss_mp(const surrogates::Surrogate& model, const Window& window, const LossConfig& cfg,
               const MPConfig& mp, DiscontinuityBank& bank, const std::vector<std::size_t>& window_ids);

}  // namespace mpstep::training
