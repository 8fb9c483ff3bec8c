#pragma once

#include <complex>
#include <span>
#include <vector>

#include "autodiff/tensor.hpp"

namespace mpstep::ad {

// Complex array stored as one graph tensor of shape [2, ...]: the real buffer
// followed by the imaginary buffer. Gradients follow the convention
// g = dL/dRe + i dL/dIm, so a complex-linear map A back-propagates as A^H.
class ComplexTensor {
 public:
  explicit ComplexTensor(Tensor packed);
  static ComplexTensor from_complex(Shape shape, std::span<const std::complex<double>> values);

  const Shape& shape() const { return shape_; }
  std::size_t numel() const { return ad::numel(shape_); }
  std::span<const double> real() const { return packed_.values().first(numel()); }
  std::span<const double> imag() const { return packed_.values().subspan(numel()); }
  std::vector<std::complex<double>> values() const;
  const Tensor& packed() const { return packed_; }
  bool requires_grad() const { return packed_.requires_grad(); }

 private:
  Tensor packed_;
  Shape shape_;
};

ComplexTensor to_complex(const Tensor& re);
ComplexTensor to_complex(const Tensor& re, const Tensor& im);
Tensor real_part(const ComplexTensor& z);
Tensor imag_part(const ComplexTensor& z);

// Unitary transforms over the two trailing axes, which must be powers of two.
ComplexTensor fft2(const ComplexTensor& z);
ComplexTensor fft2(const Tensor& x);
ComplexTensor ifft2(const ComplexTensor& z);

// Per-mode channel mixing of a spectrum z [B, Cin, H, W] with complex weights
// (w_re, w_im) of shape [Cin, Cout, 2*modes, modes]. Only rows
// {0..modes-1, H-modes..H-1} and columns {0..modes-1} are kept; all other
// modes of the result are zero.
ComplexTensor spectral_mix(const ComplexTensor& z, const Tensor& w_re, const Tensor& w_im,
                           std::size_t modes);

}  // namespace mpstep::ad
