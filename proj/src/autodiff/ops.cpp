#include "autodiff/ops.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <Eigen/Dense>

#include "common/error.hpp"

namespace mpstep::ad {
namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapMatrix = Eigen::Map<RowMatrix>;
using ConstMapMatrix = Eigen::Map<const RowMatrix>;

// Maps every element of a broadcast result to its source element.
struct IndexMap {
  enum class Kind { Identity, Scalar, General } kind = Kind::Identity;
  std::vector<std::size_t> index;

  std::size_t operator()(std::size_t i) const {
    switch (kind) {
      case Kind::Identity:
        return i;
      case Kind::Scalar:
        return 0;
      default:
        return index[i];
    }
  }
};

bool broadcastable(const Shape& from, const Shape& to) {
  if (numel(from) == 1) return true;
  if (from.size() > to.size()) return false;
  const std::size_t offset = to.size() - from.size();
  for (std::size_t i = 0; i < from.size(); ++i) {
    if (from[i] != to[i + offset] && from[i] != 1) return false;
  }
  return true;
}

IndexMap make_index_map(const Shape& from, const Shape& to) {
  IndexMap map;
  if (from == to) return map;
  if (numel(from) == 1) {
    map.kind = IndexMap::Kind::Scalar;
    return map;
  }
  map.kind = IndexMap::Kind::General;
  const std::size_t nd = to.size();
  const std::size_t offset = nd - from.size();
  std::vector<std::size_t> stride(nd, 0);
  std::size_t s = 1;
  for (std::size_t i = from.size(); i-- > 0;) {
    stride[i + offset] = from[i] == 1 ? 0 : s;
    s *= from[i];
  }
  const std::size_t n = numel(to);
  map.index.resize(n);
  std::vector<std::size_t> counter(nd, 0);
  std::size_t src = 0;
  for (std::size_t i = 0; i < n; ++i) {
    map.index[i] = src;
    for (std::size_t d = nd; d-- > 0;) {
      ++counter[d];
      src += stride[d];
      if (counter[d] < to[d]) break;
      src -= stride[d] * counter[d];
      counter[d] = 0;
    }
  }
  return map;
}

const char* binary_name(BinaryOp op) {
  switch (op) {
    case BinaryOp::Add: return "add";
    case BinaryOp::Sub: return "sub";
    case BinaryOp::Mul: return "mul";
    case BinaryOp::Div: return "div";
    case BinaryOp::Pow: return "pow";
  }
  return "?";
}

const char* unary_name(UnaryOp op) {
  switch (op) {
    case UnaryOp::Neg: return "neg";
    case UnaryOp::Tanh: return "tanh";
    case UnaryOp::Gelu: return "gelu";
    case UnaryOp::Relu: return "relu";
    case UnaryOp::Exp: return "exp";
    case UnaryOp::Sqrt: return "sqrt";
    case UnaryOp::Abs: return "abs";
    case UnaryOp::Square: return "square";
  }
  return "?";
}

double apply(BinaryOp op, double a, double b) {
  switch (op) {
    case BinaryOp::Add: return a + b;
    case BinaryOp::Sub: return a - b;
    case BinaryOp::Mul: return a * b;
    case BinaryOp::Div: return a / b;
    case BinaryOp::Pow: return std::pow(a, b);
  }
  return 0.0;
}

constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kInvSqrt2Pi = 0.39894228040143267794;

}  // namespace

Tensor elementwise(BinaryOp op, const Tensor& a, const Tensor& b) {
  Shape out_shape;
  if (a.shape() == b.shape() || broadcastable(b.shape(), a.shape())) {
    out_shape = a.shape();
  } else if (broadcastable(a.shape(), b.shape())) {
    out_shape = b.shape();
  } else {
    throw ShapeError(std::string(binary_name(op)) + ": cannot broadcast shapes " +
                     to_string(a.shape()) + " and " + to_string(b.shape()));
  }
  const std::size_t n = numel(out_shape);
  IndexMap amap = make_index_map(a.shape(), out_shape);
  IndexMap bmap = make_index_map(b.shape(), out_shape);

  std::vector<double> out(n);
  const auto av = a.values();
  const auto bv = b.values();
  if (amap.kind == IndexMap::Kind::Identity && bmap.kind == IndexMap::Kind::Identity) {
    for (std::size_t i = 0; i < n; ++i) out[i] = apply(op, av[i], bv[i]);
  } else if (amap.kind == IndexMap::Kind::Identity && bmap.kind == IndexMap::Kind::Scalar) {
    const double s = bv[0];
    for (std::size_t i = 0; i < n; ++i) out[i] = apply(op, av[i], s);
  } else {
    for (std::size_t i = 0; i < n; ++i) out[i] = apply(op, av[amap(i)], bv[bmap(i)]);
  }

  return make_result(
      binary_name(op), out_shape, std::move(out), {a, b},
      [op, a, b, amap = std::move(amap), bmap = std::move(bmap)](
          std::span<const double> outv, std::span<const double> g,
          std::span<std::vector<double>* const> pg) {
        const auto av = a.values();
        const auto bv = b.values();
        auto* ga = pg[0];
        auto* gb = pg[1];
        for (std::size_t i = 0; i < g.size(); ++i) {
          const std::size_t ia = amap(i);
          const std::size_t ib = bmap(i);
          const double x = av[ia];
          const double y = bv[ib];
          switch (op) {
            case BinaryOp::Add:
              if (ga) (*ga)[ia] += g[i];
              if (gb) (*gb)[ib] += g[i];
              break;
            case BinaryOp::Sub:
              if (ga) (*ga)[ia] += g[i];
              if (gb) (*gb)[ib] -= g[i];
              break;
            case BinaryOp::Mul:
              if (ga) (*ga)[ia] += g[i] * y;
              if (gb) (*gb)[ib] += g[i] * x;
              break;
            case BinaryOp::Div:
              if (ga) (*ga)[ia] += g[i] / y;
              if (gb) (*gb)[ib] -= g[i] * x / (y * y);
              break;
            case BinaryOp::Pow:
              if (ga) (*ga)[ia] += g[i] * y * std::pow(x, y - 1.0);
              if (gb) (*gb)[ib] += g[i] * outv[i] * std::log(x);
              break;
          }
        }
      });
}

Tensor elementwise(BinaryOp op, const Tensor& a, double b) {
  return elementwise(op, a, Tensor::scalar(b));
}

Tensor elementwise(UnaryOp op, const Tensor& x) {
  const auto xv = x.values();
  std::vector<double> out(xv.size());
  for (std::size_t i = 0; i < xv.size(); ++i) {
    const double v = xv[i];
    switch (op) {
      case UnaryOp::Neg: out[i] = -v; break;
      case UnaryOp::Tanh: out[i] = std::tanh(v); break;
      case UnaryOp::Gelu: out[i] = 0.5 * v * (1.0 + std::erf(v * kInvSqrt2)); break;
      case UnaryOp::Relu: out[i] = v > 0.0 ? v : 0.0; break;
      case UnaryOp::Exp: out[i] = std::exp(v); break;
      case UnaryOp::Sqrt: out[i] = std::sqrt(v); break;
      case UnaryOp::Abs: out[i] = std::abs(v); break;
      case UnaryOp::Square: out[i] = v * v; break;
    }
  }
  return make_result(unary_name(op), x.shape(), std::move(out), {x},
                     [op, x](std::span<const double> outv, std::span<const double> g,
                             std::span<std::vector<double>* const> pg) {
                       auto& gx = *pg[0];
                       const auto xv = x.values();
                       for (std::size_t i = 0; i < g.size(); ++i) {
                         const double v = xv[i];
                         double d = 0.0;
                         switch (op) {
                           case UnaryOp::Neg: d = -1.0; break;
                           case UnaryOp::Tanh: d = 1.0 - outv[i] * outv[i]; break;
                           case UnaryOp::Gelu:
                             d = 0.5 * (1.0 + std::erf(v * kInvSqrt2)) +
                                 v * kInvSqrt2Pi * std::exp(-0.5 * v * v);
                             break;
                           case UnaryOp::Relu: d = v > 0.0 ? 1.0 : 0.0; break;
                           case UnaryOp::Exp: d = outv[i]; break;
                           case UnaryOp::Sqrt: d = 0.5 / outv[i]; break;
                           case UnaryOp::Abs: d = v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); break;
                           case UnaryOp::Square: d = 2.0 * v; break;
                         }
                         gx[i] += g[i] * d;
                       }
                     });
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.ndim() != 2 || b.ndim() != 2 || a.shape()[1] != b.shape()[0]) {
    throw ShapeError("matmul: incompatible shapes " + to_string(a.shape()) + " and " +
                     to_string(b.shape()));
  }
  const auto m = static_cast<Eigen::Index>(a.shape()[0]);
  const auto k = static_cast<Eigen::Index>(a.shape()[1]);
  const auto n = static_cast<Eigen::Index>(b.shape()[1]);
  std::vector<double> out(static_cast<std::size_t>(m * n));
  MapMatrix(out.data(), m, n).noalias() =
      ConstMapMatrix(a.values().data(), m, k) * ConstMapMatrix(b.values().data(), k, n);
  return make_result("matmul", {a.shape()[0], b.shape()[1]}, std::move(out), {a, b},
                     [a, b, m, k, n](std::span<const double>, std::span<const double> g,
                                     std::span<std::vector<double>* const> pg) {
                       ConstMapMatrix G(g.data(), m, n);
                       if (pg[0]) {
                         MapMatrix(pg[0]->data(), m, k).noalias() +=
                             G * ConstMapMatrix(b.values().data(), k, n).transpose();
                       }
                       if (pg[1]) {
                         MapMatrix(pg[1]->data(), k, n).noalias() +=
                             ConstMapMatrix(a.values().data(), m, k).transpose() * G;
                       }
                     });
}

Tensor reduce(ReduceOp op, const Tensor& x, std::span<const std::size_t> axes) {
  const Shape& in = x.shape();
  std::vector<bool> reduced(in.size(), axes.empty());
  for (auto ax : axes) {
    if (ax >= in.size()) {
      throw ShapeError("reduce: axis " + std::to_string(ax) + " out of range for shape " +
                       to_string(in));
    }
    reduced[ax] = true;
  }
  Shape out_shape;
  for (std::size_t d = 0; d < in.size(); ++d) {
    if (!reduced[d]) out_shape.push_back(in[d]);
  }
  const std::size_t n_in = x.numel();
  const std::size_t n_out = numel(out_shape);
  const double count = n_out == 0 ? 0.0 : static_cast<double>(n_in) / static_cast<double>(n_out);

  // Output index of every input element.
  auto map = std::make_shared<std::vector<std::size_t>>(n_in, 0);
  if (n_out > 1) {
    std::vector<std::size_t> out_stride(in.size(), 0);
    std::size_t s = 1;
    for (std::size_t d = in.size(); d-- > 0;) {
      if (!reduced[d]) {
        out_stride[d] = s;
        s *= in[d];
      }
    }
    std::vector<std::size_t> counter(in.size(), 0);
    std::size_t dst = 0;
    for (std::size_t i = 0; i < n_in; ++i) {
      (*map)[i] = dst;
      for (std::size_t d = in.size(); d-- > 0;) {
        ++counter[d];
        dst += out_stride[d];
        if (counter[d] < in[d]) break;
        dst -= out_stride[d] * counter[d];
        counter[d] = 0;
      }
    }
  }

  const auto xv = x.values();
  std::vector<double> out(n_out, 0.0);
  for (std::size_t i = 0; i < n_in; ++i) {
    out[(*map)[i]] += op == ReduceOp::SqNorm ? xv[i] * xv[i] : xv[i];
  }
  if (op == ReduceOp::Mean) {
    for (auto& v : out) v /= count;
  }
  const char* kind = op == ReduceOp::Sum ? "sum" : (op == ReduceOp::Mean ? "mean" : "sq_norm");
  return make_result(kind, std::move(out_shape), std::move(out), {x},
                     [op, x, map, count](std::span<const double>, std::span<const double> g,
                                         std::span<std::vector<double>* const> pg) {
                       auto& gx = *pg[0];
                       const auto xv = x.values();
                       for (std::size_t i = 0; i < gx.size(); ++i) {
                         const double go = g[(*map)[i]];
                         switch (op) {
                           case ReduceOp::Sum: gx[i] += go; break;
                           case ReduceOp::Mean: gx[i] += go / count; break;
                           case ReduceOp::SqNorm: gx[i] += 2.0 * xv[i] * go; break;
                         }
                       }
                     });
}

Tensor reshape(const Tensor& x, Shape shape) {
  if (numel(shape) != x.numel()) {
    throw ShapeError("reshape: cannot view " + to_string(x.shape()) + " as " + to_string(shape));
  }
  std::vector<double> out(x.values().begin(), x.values().end());
  return make_result("reshape", std::move(shape), std::move(out), {x},
                     [](std::span<const double>, std::span<const double> g,
                        std::span<std::vector<double>* const> pg) {
                       auto& gx = *pg[0];
                       for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
                     });
}

Tensor stack(std::span<const Tensor> parts) {
  if (parts.empty()) throw ShapeError("stack: no tensors given");
  const Shape& inner = parts[0].shape();
  for (const auto& p : parts) {
    if (p.shape() != inner) {
      throw ShapeError("stack: shape " + to_string(p.shape()) + " differs from " + to_string(inner));
    }
  }
  const std::size_t block = numel(inner);
  std::vector<double> out;
  out.reserve(block * parts.size());
  for (const auto& p : parts) out.insert(out.end(), p.values().begin(), p.values().end());
  Shape shape{parts.size()};
  shape.insert(shape.end(), inner.begin(), inner.end());
  return make_result("stack", std::move(shape), std::move(out), {parts.begin(), parts.end()},
                     [block](std::span<const double>, std::span<const double> g,
                             std::span<std::vector<double>* const> pg) {
                       for (std::size_t k = 0; k < pg.size(); ++k) {
                         if (!pg[k]) continue;
                         for (std::size_t i = 0; i < block; ++i) (*pg[k])[i] += g[k * block + i];
                       }
                     });
}

Tensor select(const Tensor& x, std::size_t index) {
  if (x.ndim() == 0 || index >= x.shape()[0]) {
    throw ShapeError("select: index " + std::to_string(index) + " out of range for shape " +
                     to_string(x.shape()));
  }
  Shape inner(x.shape().begin() + 1, x.shape().end());
  const std::size_t block = numel(inner);
  const auto xv = x.values();
  std::vector<double> out(xv.begin() + static_cast<std::ptrdiff_t>(index * block),
                          xv.begin() + static_cast<std::ptrdiff_t>((index + 1) * block));
  return make_result("select", std::move(inner), std::move(out), {x},
                     [index, block](std::span<const double>, std::span<const double> g,
                                    std::span<std::vector<double>* const> pg) {
                       auto& gx = *pg[0];
                       for (std::size_t i = 0; i < block; ++i) gx[index * block + i] += g[i];
                     });
}

Tensor detach(const Tensor& x) {
  if (x.is_leaf() && !x.requires_grad()) return x;
  return Tensor::from(x.shape(), std::vector<double>(x.values().begin(), x.values().end()));
}

Tensor channel_linear(const Tensor& x, const Tensor& weight, const std::optional<Tensor>& bias) {
  if (x.ndim() < 2 || weight.ndim() != 2 || weight.shape()[1] != x.shape()[1]) {
    throw ShapeError("channel_linear: input " + to_string(x.shape()) + " incompatible with weight " +
                     to_string(weight.shape()));
  }
  const std::size_t batch = x.shape()[0];
  const std::size_t cin = x.shape()[1];
  const std::size_t cout = weight.shape()[0];
  if (bias && (bias->ndim() != 1 || bias->shape()[0] != cout)) {
    throw ShapeError("channel_linear: bias " + to_string(bias->shape()) + " does not match weight " +
                     to_string(weight.shape()));
  }
  const std::size_t spatial = x.numel() / (batch * cin);
  Shape out_shape = x.shape();
  out_shape[1] = cout;
  std::vector<double> out(batch * cout * spatial);
  const auto ci = static_cast<Eigen::Index>(cin);
  const auto co = static_cast<Eigen::Index>(cout);
  const auto sp = static_cast<Eigen::Index>(spatial);
  ConstMapMatrix W(weight.values().data(), co, ci);
  for (std::size_t b = 0; b < batch; ++b) {
    MapMatrix Y(out.data() + b * cout * spatial, co, sp);
    Y.noalias() = W * ConstMapMatrix(x.values().data() + b * cin * spatial, ci, sp);
    if (bias) {
      for (Eigen::Index o = 0; o < co; ++o) Y.row(o).array() += bias->value(static_cast<std::size_t>(o));
    }
  }
  std::vector<Tensor> parents{x, weight};
  if (bias) parents.push_back(*bias);
  return make_result(
      "channel_linear", std::move(out_shape), std::move(out), std::move(parents),
      [x, weight, batch, ci, co, sp](std::span<const double>, std::span<const double> g,
                                     std::span<std::vector<double>* const> pg) {
        ConstMapMatrix W(weight.values().data(), co, ci);
        for (std::size_t b = 0; b < batch; ++b) {
          ConstMapMatrix G(g.data() + b * static_cast<std::size_t>(co * sp), co, sp);
          if (pg[0]) {
            MapMatrix(pg[0]->data() + b * static_cast<std::size_t>(ci * sp), ci, sp).noalias() +=
                W.transpose() * G;
          }
          if (pg[1]) {
            MapMatrix(pg[1]->data(), co, ci).noalias() +=
                G * ConstMapMatrix(x.values().data() + b * static_cast<std::size_t>(ci * sp), ci, sp)
                        .transpose();
          }
          if (pg.size() > 2 && pg[2]) {
            for (Eigen::Index o = 0; o < co; ++o) (*pg[2])[static_cast<std::size_t>(o)] += G.row(o).sum();
          }
        }
      });
}

}  // namespace mpstep::ad
