#include "autodiff/fft.hpp"

#include <cmath>
#include <map>
#include <numbers>
#include <vector>

#include "common/error.hpp"

namespace mpstep::fft {
namespace {

struct Plan {
  std::vector<std::size_t> bitrev;
  std::vector<Complex> twiddle;  // exp(-2 pi i k / n), k < n/2
};

const Plan& plan_for(std::size_t n) {
  thread_local std::map<std::size_t, Plan> cache;
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;
  Plan p;
  p.bitrev.resize(n);
  std::size_t bits = 0;
  while ((std::size_t{1} << bits) < n) ++bits;
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t r = 0;
    for (std::size_t b = 0; b < bits; ++b) {
      if (i & (std::size_t{1} << b)) r |= std::size_t{1} << (bits - 1 - b);
    }
    p.bitrev[i] = r;
  }
  p.twiddle.resize(n / 2);
  for (std::size_t k = 0; k < n / 2; ++k) {
    const double angle = -2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n);
    p.twiddle[k] = {std::cos(angle), std::sin(angle)};
  }
  return cache.emplace(n, std::move(p)).first->second;
}

// Unscaled radix-2 decimation-in-time transform of a contiguous sequence.
void fft1(Complex* x, std::size_t n, const Plan& p, bool inverse) {
  if (n < 2) return;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t j = p.bitrev[i];
    if (i < j) std::swap(x[i], x[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const std::size_t half = len / 2;
    const std::size_t step = n / len;
    for (std::size_t start = 0; start < n; start += len) {
      for (std::size_t k = 0; k < half; ++k) {
        const double wr = p.twiddle[k * step].real();
        const double wi = inverse ? -p.twiddle[k * step].imag() : p.twiddle[k * step].imag();
        const Complex a = x[start + k + half];
        const Complex u = x[start + k];
        const Complex v{a.real() * wr - a.imag() * wi, a.real() * wi + a.imag() * wr};
        x[start + k] = u + v;
        x[start + k + half] = u - v;
      }
    }
  }
}

}  // namespace

bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

void fft2_inplace(std::span<Complex> data, std::size_t batch, std::size_t h, std::size_t w,
                  bool inverse) {
  if (!is_power_of_two(h) || !is_power_of_two(w)) {
    throw ShapeError("fft2 needs power-of-two dimensions, got " + std::to_string(h) + "x" +
                     std::to_string(w));
  }
  if (data.size() != batch * h * w) throw ShapeError("fft2: buffer size does not match batch*h*w");
  const double scale = 1.0 / std::sqrt(static_cast<double>(h * w));
  std::vector<Complex> column(h);
  const Plan& row_plan = plan_for(w);
  const Plan& col_plan = plan_for(h);
  for (std::size_t b = 0; b < batch; ++b) {
    Complex* block = data.data() + b * h * w;
    for (std::size_t r = 0; r < h; ++r) fft1(block + r * w, w, row_plan, inverse);
    for (std::size_t c = 0; c < w; ++c) {
      for (std::size_t r = 0; r < h; ++r) column[r] = block[r * w + c];
      fft1(column.data(), h, col_plan, inverse);
      for (std::size_t r = 0; r < h; ++r) block[r * w + c] = column[r] * scale;
    }
  }
}

}  // namespace mpstep::fft
