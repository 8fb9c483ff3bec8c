#include "autodiff/complex.hpp"

#include "autodiff/fft.hpp"
#include "autodiff/ops.hpp"
#include "common/error.hpp"

namespace mpstep::ad {
namespace {

using Complex = std::complex<double>;

std::vector<Complex> unpack(std::span<const double> packed) {
  const std::size_t n = packed.size() / 2;
  std::vector<Complex> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = {packed[i], packed[n + i]};
  return out;
}

void pack_into(std::span<const Complex> z, std::span<double> packed) {
  const std::size_t n = z.size();
  for (std::size_t i = 0; i < n; ++i) {
    packed[i] = z[i].real();
    packed[n + i] = z[i].imag();
  }
}

ComplexTensor transform(const ComplexTensor& z, bool inverse) {
  const Shape& shape = z.shape();
  if (shape.size() < 2) throw ShapeError("fft2 needs at least two axes, got " + to_string(shape));
  const std::size_t h = shape[shape.size() - 2];
  const std::size_t w = shape[shape.size() - 1];
  if (!fft::is_power_of_two(h) || !fft::is_power_of_two(w)) {
    throw ShapeError("fft2 needs power-of-two trailing axes, got " + to_string(shape));
  }
  const std::size_t batch = z.numel() / (h * w);
  auto buf = unpack(z.packed().values());
  fft::fft2_inplace(buf, batch, h, w, inverse);
  std::vector<double> out(2 * buf.size());
  pack_into(buf, out);
  return ComplexTensor(make_result(
      inverse ? "ifft2" : "fft2", z.packed().shape(), std::move(out), {z.packed()},
      [batch, h, w, inverse](std::span<const double>, std::span<const double> g,
                             std::span<std::vector<double>* const> pg) {
        auto gz = unpack(g);
        fft::fft2_inplace(gz, batch, h, w, !inverse);
        auto& dst = *pg[0];
        const std::size_t n = gz.size();
        for (std::size_t i = 0; i < n; ++i) {
          dst[i] += gz[i].real();
          dst[n + i] += gz[i].imag();
        }
      }));
}

}  // namespace

ComplexTensor::ComplexTensor(Tensor packed) : packed_(std::move(packed)) {
  if (packed_.ndim() == 0 || packed_.shape()[0] != 2) {
    throw ShapeError("complex tensor needs a leading axis of 2, got " + to_string(packed_.shape()));
  }
  shape_.assign(packed_.shape().begin() + 1, packed_.shape().end());
}

ComplexTensor ComplexTensor::from_complex(Shape shape, std::span<const std::complex<double>> values) {
  if (ad::numel(shape) != values.size()) {
    throw ShapeError("complex values do not match shape " + to_string(shape));
  }
  std::vector<double> packed(2 * values.size());
  pack_into(values, packed);
  Shape full{2};
  full.insert(full.end(), shape.begin(), shape.end());
  return ComplexTensor(Tensor::from(std::move(full), std::move(packed)));
}

std::vector<std::complex<double>> ComplexTensor::values() const { return unpack(packed_.values()); }

ComplexTensor to_complex(const Tensor& re) { return to_complex(re, Tensor::zeros(re.shape())); }

ComplexTensor to_complex(const Tensor& re, const Tensor& im) {
  const Tensor parts[] = {re, im};
  return ComplexTensor(stack(parts));
}

Tensor real_part(const ComplexTensor& z) { return select(z.packed(), 0); }
Tensor imag_part(const ComplexTensor& z) { return select(z.packed(), 1); }

ComplexTensor fft2(const ComplexTensor& z) { return transform(z, false); }
ComplexTensor fft2(const Tensor& x) { return transform(to_complex(x), false); }
ComplexTensor ifft2(const ComplexTensor& z) { return transform(z, true); }

ComplexTensor spectral_mix(const ComplexTensor& z, const Tensor& w_re, const Tensor& w_im,
                           std::size_t modes) {
  const Shape& zs = z.shape();
  if (zs.size() != 4) throw ShapeError("spectral_mix expects [B, C, H, W], got " + to_string(zs));
  const std::size_t batch = zs[0], cin = zs[1], h = zs[2], w = zs[3];
  if (modes == 0 || 2 * modes > h || modes > w) {
    throw ShapeError("spectral_mix: " + std::to_string(modes) + " modes do not fit a " +
                     std::to_string(h) + "x" + std::to_string(w) + " grid");
  }
  if (w_re.ndim() != 4 || w_re.shape()[0] != cin || w_re.shape()[2] != 2 * modes ||
      w_re.shape()[3] != modes || w_im.shape() != w_re.shape()) {
    throw ShapeError("spectral_mix: weights " + to_string(w_re.shape()) + " / " +
                     to_string(w_im.shape()) + " do not match input " + to_string(zs) + " with " +
                     std::to_string(modes) + " modes");
  }
  const std::size_t cout = w_re.shape()[1];
  const std::size_t n_in = z.numel();
  const std::size_t n_out = batch * cout * h * w;
  const std::size_t rows = 2 * modes;
  auto row_of = [h, modes](std::size_t j) { return j < modes ? j : h - 2 * modes + j; };
  auto widx = [cout, rows, modes](std::size_t i, std::size_t o, std::size_t j, std::size_t c) {
    return ((i * cout + o) * rows + j) * modes + c;
  };

  const auto zv = z.packed().values();
  const auto wr = w_re.values();
  const auto wi = w_im.values();
  std::vector<double> out(2 * n_out, 0.0);
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t o = 0; o < cout; ++o) {
      for (std::size_t i = 0; i < cin; ++i) {
        for (std::size_t j = 0; j < rows; ++j) {
          const std::size_t r = row_of(j);
          for (std::size_t c = 0; c < modes; ++c) {
            const std::size_t zi = ((b * cin + i) * h + r) * w + c;
            const std::size_t oi = ((b * cout + o) * h + r) * w + c;
            const std::size_t k = widx(i, o, j, c);
            const double xr = zv[zi], xi = zv[n_in + zi];
            out[oi] += xr * wr[k] - xi * wi[k];
            out[n_out + oi] += xr * wi[k] + xi * wr[k];
          }
        }
      }
    }
  }

  Shape out_shape{2, batch, cout, h, w};
  return ComplexTensor(make_result(
      "spectral_mix", std::move(out_shape), std::move(out), {z.packed(), w_re, w_im},
      [z, w_re, w_im, batch, cin, cout, h, w, rows, modes, n_in, n_out, row_of, widx](
          std::span<const double>, std::span<const double> g,
          std::span<std::vector<double>* const> pg) {
        const auto zv = z.packed().values();
        const auto wr = w_re.values();
        const auto wi = w_im.values();
        for (std::size_t b = 0; b < batch; ++b) {
          for (std::size_t o = 0; o < cout; ++o) {
            for (std::size_t i = 0; i < cin; ++i) {
              for (std::size_t j = 0; j < rows; ++j) {
                const std::size_t r = row_of(j);
                for (std::size_t c = 0; c < modes; ++c) {
                  const std::size_t zi = ((b * cin + i) * h + r) * w + c;
                  const std::size_t oi = ((b * cout + o) * h + r) * w + c;
                  const std::size_t k = widx(i, o, j, c);
                  const double gr = g[oi], gi = g[n_out + oi];
                  if (pg[0]) {
                    // g * conj(w)
                    (*pg[0])[zi] += gr * wr[k] + gi * wi[k];
                    (*pg[0])[n_in + zi] += gi * wr[k] - gr * wi[k];
                  }
                  const double xr = zv[zi], xi = zv[n_in + zi];
                  // g * conj(z)
                  if (pg[1]) (*pg[1])[k] += gr * xr + gi * xi;
                  if (pg[2]) (*pg[2])[k] += gi * xr - gr * xi;
                }
              }
            }
          }
        }
      }));
}

}  // namespace mpstep::ad
