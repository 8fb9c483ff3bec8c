#pragma once

#include <complex>
#include <cstddef>
#include <span>

namespace mpstep::fft {

using Complex = std::complex<double>;

bool is_power_of_two(std::size_t n);

// In-place unitary 2-D DFT over the trailing [h x w] block of each of `batch`
// consecutive blocks. Forward uses exp(-i...), inverse exp(+i...); both scale
// by 1/sqrt(h*w). h and w must be powers of two.
void fft2_inplace(std::span<Complex> data, std::size_t batch, std::size_t h, std::size_t w,
                  bool inverse);

// Signed integer wavenumber of DFT index `i` on an n-point grid, in [-n/2, n/2).
inline long wavenumber(std::size_t i, std::size_t n) {
  return i < n / 2 ? static_cast<long>(i) : static_cast<long>(i) - static_cast<long>(n);
}

}  // namespace mpstep::fft
