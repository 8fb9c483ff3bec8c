#pragma once

#include <optional>
#include <span>
#include <vector>

#include "autodiff/tensor.hpp"

namespace mpstep::ad {

enum class BinaryOp { Add, Sub, Mul, Div, Pow };
enum class UnaryOp { Neg, Tanh, Gelu, Relu, Exp, Sqrt, Abs, Square };
enum class ReduceOp { Sum, Mean, SqNorm };

// Binary ops broadcast one operand against the other: either operand may be a
// single element, or its shape may be right-aligned against the other's with
// every dimension equal or 1.
Tensor elementwise(BinaryOp op, const Tensor& a, const Tensor& b);
Tensor elementwise(BinaryOp op, const Tensor& a, double b);
Tensor elementwise(UnaryOp op, const Tensor& x);

inline Tensor add(const Tensor& a, const Tensor& b) { return elementwise(BinaryOp::Add, a, b); }
inline Tensor sub(const Tensor& a, const Tensor& b) { return elementwise(BinaryOp::Sub, a, b); }
inline Tensor mul(const Tensor& a, const Tensor& b) { return elementwise(BinaryOp::Mul, a, b); }
inline Tensor div(const Tensor& a, const Tensor& b) { return elementwise(BinaryOp::Div, a, b); }
inline Tensor pow(const Tensor& a, const Tensor& b) { return elementwise(BinaryOp::Pow, a, b); }
inline Tensor pow(const Tensor& a, double b) { return elementwise(BinaryOp::Pow, a, b); }

inline Tensor neg(const Tensor& x) { return elementwise(UnaryOp::Neg, x); }
inline Tensor tanh(const Tensor& x) { return elementwise(UnaryOp::Tanh, x); }
inline Tensor gelu(const Tensor& x) { return elementwise(UnaryOp::Gelu, x); }
inline Tensor relu(const Tensor& x) { return elementwise(UnaryOp::Relu, x); }
inline Tensor exp(const Tensor& x) { return elementwise(UnaryOp::Exp, x); }
inline Tensor sqrt(const Tensor& x) { return elementwise(UnaryOp::Sqrt, x); }
inline Tensor abs(const Tensor& x) { return elementwise(UnaryOp::Abs, x); }
inline Tensor square(const Tensor& x) { return elementwise(UnaryOp::Square, x); }

inline Tensor operator+(const Tensor& a, const Tensor& b) { return add(a, b); }
inline Tensor operator-(const Tensor& a, const Tensor& b) { return sub(a, b); }
inline Tensor operator*(const Tensor& a, const Tensor& b) { return mul(a, b); }
inline Tensor operator/(const Tensor& a, const Tensor& b) { return div(a, b); }
inline Tensor operator-(const Tensor& x) { return neg(x); }
inline Tensor operator+(const Tensor& a, double b) { return elementwise(BinaryOp::Add, a, b); }
inline Tensor operator-(const Tensor& a, double b) { return elementwise(BinaryOp::Sub, a, b); }
inline Tensor operator*(const Tensor& a, double b) { return elementwise(BinaryOp::Mul, a, b); }
inline Tensor operator*(double a, const Tensor& b) { return elementwise(BinaryOp::Mul, b, a); }
inline Tensor operator/(const Tensor& a, double b) { return elementwise(BinaryOp::Div, a, b); }

// [m x k] . [k x n]
Tensor matmul(const Tensor& a, const Tensor& b);

// Reduces over `axes` (all axes when empty); reduced axes are dropped from the
// result shape.
Tensor reduce(ReduceOp op, const Tensor& x, std::span<const std::size_t> axes = {});
inline Tensor sum(const Tensor& x) { return reduce(ReduceOp::Sum, x); }
inline Tensor mean(const Tensor& x) { return reduce(ReduceOp::Mean, x); }
inline Tensor sq_norm(const Tensor& x) { return reduce(ReduceOp::SqNorm, x); }

Tensor reshape(const Tensor& x, Shape shape);

// Stacks equally shaped tensors along a new leading axis.
Tensor stack(std::span<const Tensor> parts);

// x[index, ...] along the leading axis.
Tensor select(const Tensor& x, std::size_t index);

// Same values, no graph node, requires_grad = false.
Tensor detach(const Tensor& x);

// Pointwise channel mixing: x [B, Cin, ...], weight [Cout, Cin], bias [Cout]
// -> [B, Cout, ...].
Tensor channel_linear(const Tensor& x, const Tensor& weight, const std::optional<Tensor>& bias);

}  // namespace mpstep::ad
