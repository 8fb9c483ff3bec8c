#include "training/discontinuity_bank.hpp"

#include <cmath>

#include "common/error.hpp"

namespace mpstep::training {

DiscontinuityBank::DiscontinuityBank(ad::Shape state_shape) : state_shape_(std::move(state_shape)) {}

ad::Tensor& DiscontinuityBank::get(std::size_t window_id, std::size_t k) {
  if (k < 1) throw ConfigError("discontinuity index k starts at 1");
  auto it = entries_.find({window_id, k});
  if (it == entries_.end()) {
    it = entries_.emplace(Key{window_id, k},
                          ad::Tensor::parameter(state_shape_, std::vector<double>(ad::numel(state_shape_), 0.0)))
             .first;
  }
  return it->second;
}

void DiscontinuityBank::set(std::size_t window_id, std::size_t k, std::vector<double> values) {
  if (values.size() != ad::numel(state_shape_)) throw ShapeError("discontinuity size does not match state shape");
  auto values_span = get(window_id, k).mutable_values();
  std::copy(values.begin(), values.end(), values_span.begin());
}

double DiscontinuityBank::mean_norm() const {
  if (entries_.empty()) return 0.0;
  double total = 0.0;
  for (const auto& [key, delta] : entries_) {
    double sq = 0.0;
    for (double v : delta.values()) sq += v * v;
    total += std::sqrt(sq);
  }
  return total / static_cast<double>(entries_.size());
}

std::string DiscontinuityBank::slot_name(std::size_t window_id, std::size_t k) {
  return std::to_string(window_id) + "/" + std::to_string(k);
}

std::vector<surrogates::NamedParameter> DiscontinuityBank::parameters(const std::vector<std::size_t>& window_ids,
                                                                      std::size_t s) {
  std::vector<surrogates::NamedParameter> out;
  for (std::size_t w : window_ids) {
    for (std::size_t k = 1; k <= s; ++k) out.push_back({slot_name(w, k), get(w, k)});
  }
  return out;
}

}  // namespace mpstep::training
