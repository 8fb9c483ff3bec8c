#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "autodiff/tensor.hpp"
#include "surrogates/surrogate.hpp"

namespace mpstep::training {

// Learnable discontinuities delta_k keyed by (window_id, k), k = 1..s.
// Entries are created zero-initialized on first access.
class DiscontinuityBank {
 public:
  using Key = std::pair<std::size_t, std::size_t>;

  explicit DiscontinuityBank(ad::Shape state_shape = {});

  const ad::Shape& state_shape() const { return state_shape_; }
  ad::Tensor& get(std::size_t window_id, std::size_t k);
  bool contains(std::size_t window_id, std::size_t k) const { return entries_.count({window_id, k}) > 0; }
  std::size_t size() const { return entries_.size(); }
  void reset() { entries_.clear(); }

  // Mean L2 norm over all entries, 0 when empty.
  double mean_norm() const;

  static std::string slot_name(std::size_t window_id, std::size_t k);
  // The entries of the given windows for k = 1..s, named by slot_name.
  std::vector<surrogates::NamedParameter> parameters(const std::vector<std::size_t>& window_ids, std::size_t s);
  const std::map<Key, ad::Tensor>& entries() const { return entries_; }
  void set(std::size_t window_id, std::size_t k, std::vector<double> values);

 private:
  ad::Shape state_shape_;
  std::map<Key, ad::Tensor> entries_;
};

}  // namespace mpstep::training
