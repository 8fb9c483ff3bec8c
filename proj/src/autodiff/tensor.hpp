#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace mpstep::ad {

using Shape = std::vector<std::size_t>;

std::size_t numel(const Shape& shape);
std::string to_string(const Shape& shape);

class Tensor;
struct TensorImpl;

// Adds the vector-Jacobian product of one node into the gradient buffers of its
// parents. `out` holds the node's forward values. A null entry in
// `parent_grads` marks a parent that needs no gradient.
using BackwardFn = std::function<void(std::span<const double> out, std::span<const double> grad_out,
                                      std::span<std::vector<double>* const> parent_grads)>;

struct Node {
  std::string kind;
  std::vector<std::shared_ptr<TensorImpl>> parents;
  BackwardFn backward;
};

struct TensorImpl {
  Shape shape;
  std::vector<double> values;
  std::vector<double> grad;  // empty until a backward pass reaches this leaf
  bool requires_grad = false;
  std::unique_ptr<Node> node;  // null for leaves and detached tensors
  std::uint64_t id = 0;
};

// Dense float64 array, a shared handle into a reverse-mode graph. Values are
// immutable once created; only leaf parameters may be overwritten (by an
// optimizer) and only grad buffers accumulate.
class Tensor {
 public:
  Tensor();

  static Tensor from(Shape shape, std::vector<double> values);
  static Tensor zeros(Shape shape);
  static Tensor full(Shape shape, double value);
  static Tensor scalar(double value);
  // Leaf with requires_grad = true.
  static Tensor parameter(Shape shape, std::vector<double> values);

  const Shape& shape() const { return impl_->shape; }
  std::size_t ndim() const { return impl_->shape.size(); }
  std::size_t numel() const { return impl_->values.size(); }
  std::span<const double> values() const { return impl_->values; }
  double value(std::size_t i) const { return impl_->values[i]; }
  double item() const;

  bool requires_grad() const { return impl_->requires_grad; }
  bool is_leaf() const { return impl_->node == nullptr; }
  const Node* node() const { return impl_->node.get(); }
  std::uint64_t id() const { return impl_->id; }

  bool has_grad() const { return !impl_->grad.empty(); }
  // Zeros when no gradient has been accumulated yet.
  std::vector<double> grad() const;
  std::span<double> grad_buffer() { return impl_->grad; }
  void zero_grad();

  // Overwrites the values of a leaf in place (optimizer updates, checkpoint
  // restore). Throws for graph-produced tensors.
  std::span<double> mutable_values();

  const std::shared_ptr<TensorImpl>& impl() const { return impl_; }
  explicit Tensor(std::shared_ptr<TensorImpl> impl) : impl_(std::move(impl)) {}

 private:
  std::shared_ptr<TensorImpl> impl_;
};

// Creates a graph-produced tensor. Attaches `backward` only when gradients are
// enabled and some parent requires them.
Tensor make_result(std::string kind, Shape shape, std::vector<double> values,
                   std::vector<Tensor> parents, BackwardFn backward);

// Disables graph construction on the current thread while alive.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

bool grad_enabled();

// Populates grad of every reachable requires_grad leaf. Gradients accumulate
// across calls until zeroed.
void backward(const Tensor& loss);

// True when the most recent backward() on this thread left a non-finite value
// in some leaf gradient.
bool last_backward_non_finite();

void zero_grads(std::span<Tensor> tensors);

// Text listing of the DAG feeding `root`, one node per line in topological
// order: "<id> <kind> [shape] <- parent ids".
std::string dump_graph(const Tensor& root);

}  // namespace mpstep::ad
