#include "autodiff/tensor.hpp"

#include <atomic>
#include <cmath>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "common/error.hpp"

namespace mpstep::ad {
namespace {

std::atomic<std::uint64_t> g_next_id{1};
thread_local bool t_grad_enabled = true;
thread_local bool t_last_non_finite = false;

std::shared_ptr<TensorImpl> new_impl(Shape shape, std::vector<double> values) {
  if (numel(shape) != values.size()) {
    throw ShapeError("shape " + to_string(shape) + " needs " + std::to_string(numel(shape)) +
                     " values, got " + std::to_string(values.size()));
  }
  auto impl = std::make_shared<TensorImpl>();
  impl->shape = std::move(shape);
  impl->values = std::move(values);
  impl->id = g_next_id.fetch_add(1, std::memory_order_relaxed);
  return impl;
}

// Reverse topological order (root first) of all graph nodes reachable from
// `root` that require gradients.
std::vector<TensorImpl*> topo_order(TensorImpl* root) {
  enum class Mark { Active, Done };
  std::unordered_map<TensorImpl*, Mark> marks;
  std::vector<TensorImpl*> post;
  struct Frame {
    TensorImpl* t;
    std::size_t next_parent;
  };
  std::vector<Frame> stack{{root, 0}};
  marks[root] = Mark::Active;
  while (!stack.empty()) {
    auto& top = stack.back();
    const Node* node = top.t->node.get();
    if (node && top.next_parent < node->parents.size()) {
      TensorImpl* p = node->parents[top.next_parent++].get();
      if (!p->requires_grad) continue;
      auto it = marks.find(p);
      if (it == marks.end()) {
        marks[p] = Mark::Active;
        stack.push_back({p, 0});
      } else if (it->second == Mark::Active) {
        throw Error("cycle detected in computation graph at tensor " + std::to_string(p->id));
      }
      continue;
    }
    marks[top.t] = Mark::Done;
    post.push_back(top.t);
    stack.pop_back();
  }
  return {post.rbegin(), post.rend()};
}

}  // namespace

std::size_t numel(const Shape& shape) {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

std::string to_string(const Shape& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += "x";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

Tensor::Tensor() : impl_(new_impl({}, {0.0})) {}

Tensor Tensor::from(Shape shape, std::vector<double> values) {
  return Tensor(new_impl(std::move(shape), std::move(values)));
}

Tensor Tensor::zeros(Shape shape) { return full(std::move(shape), 0.0); }

Tensor Tensor::full(Shape shape, double value) {
  const auto n = ad::numel(shape);
  return from(std::move(shape), std::vector<double>(n, value));
}

Tensor Tensor::scalar(double value) { return from({}, {value}); }

Tensor Tensor::parameter(Shape shape, std::vector<double> values) {
  Tensor t = from(std::move(shape), std::move(values));
  t.impl_->requires_grad = true;
  return t;
}

double Tensor::item() const {
  if (numel() != 1) throw ShapeError("item() on tensor of shape " + to_string(shape()));
  return impl_->values[0];
}

std::vector<double> Tensor::grad() const {
  if (impl_->grad.empty()) return std::vector<double>(numel(), 0.0);
  return impl_->grad;
}

void Tensor::zero_grad() { std::fill(impl_->grad.begin(), impl_->grad.end(), 0.0); }

std::span<double> Tensor::mutable_values() {
  if (impl_->node) throw Error("cannot overwrite values of a graph-produced tensor");
  return impl_->values;
}

Tensor make_result(std::string kind, Shape shape, std::vector<double> values,
                   std::vector<Tensor> parents, BackwardFn backward) {
  auto impl = new_impl(std::move(shape), std::move(values));
  if (t_grad_enabled) {
    bool needs = false;
    for (const auto& p : parents) needs = needs || p.requires_grad();
    if (needs) {
      impl->requires_grad = true;
      impl->node = std::make_unique<Node>();
      impl->node->kind = std::move(kind);
      impl->node->backward = std::move(backward);
      impl->node->parents.reserve(parents.size());
      for (auto& p : parents) impl->node->parents.push_back(p.impl());
    }
  }
  return Tensor(std::move(impl));
}

NoGradGuard::NoGradGuard() : previous_(t_grad_enabled) { t_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { t_grad_enabled = previous_; }
bool grad_enabled() { return t_grad_enabled; }

void backward(const Tensor& loss) {
  if (loss.numel() != 1) {
    throw ShapeError("backward() needs a scalar loss, got shape " + to_string(loss.shape()));
  }
  t_last_non_finite = false;
  TensorImpl* root = loss.impl().get();
  if (!root->requires_grad) return;

  const auto order = topo_order(root);
  std::unordered_map<TensorImpl*, std::vector<double>> interior;
  std::unordered_set<TensorImpl*> touched_leaves;

  auto grad_slot = [&](TensorImpl* t) -> std::vector<double>* {
    if (!t->requires_grad) return nullptr;
    if (t->node) {
      auto& g = interior[t];
      if (g.empty()) g.assign(t->values.size(), 0.0);
      return &g;
    }
    if (t->grad.size() != t->values.size()) t->grad.assign(t->values.size(), 0.0);
    touched_leaves.insert(t);
    return &t->grad;
  };

  if (root->node) {
    interior[root] = {1.0};
  } else {
    grad_slot(root)->at(0) += 1.0;
  }

  std::vector<std::vector<double>*> slots;
  for (TensorImpl* t : order) {
    if (!t->node) continue;
    auto it = interior.find(t);
    if (it == interior.end()) continue;
    const std::vector<double> g = std::move(it->second);
    interior.erase(it);
    slots.clear();
    for (const auto& p : t->node->parents) slots.push_back(grad_slot(p.get()));
    t->node->backward(t->values, g, slots);
  }

  for (TensorImpl* leaf : touched_leaves) {
    for (double v : leaf->grad) {
      if (!std::isfinite(v)) {
        t_last_non_finite = true;
        break;
      }
    }
  }
}

bool last_backward_non_finite() { return t_last_non_finite; }

void zero_grads(std::span<Tensor> tensors) {
  for (auto& t : tensors) t.zero_grad();
}

std::string dump_graph(const Tensor& root) {
  std::ostringstream os;
  std::vector<TensorImpl*> order;
  {
    std::unordered_set<TensorImpl*> seen;
    std::vector<std::pair<TensorImpl*, bool>> stack{{root.impl().get(), false}};
    while (!stack.empty()) {
      auto [t, expanded] = stack.back();
      stack.pop_back();
      if (expanded) {
        order.push_back(t);
        continue;
      }
      if (!seen.insert(t).second) continue;
      stack.push_back({t, true});
      if (t->node) {
        for (const auto& p : t->node->parents) stack.push_back({p.get(), false});
      }
    }
  }
  for (TensorImpl* t : order) {
    os << t->id << ' ' << (t->node ? t->node->kind : (t->requires_grad ? "leaf" : "const")) << ' '
       << to_string(t->shape);
    if (t->node) {
      os << " <-";
      for (const auto& p : t->node->parents) os << ' ' << p->id;
    }
    os << '\n';
  }
  return os.str();
}

}  // namespace mpstep::ad
