#include "systems/kolmogorov2d.hpp"

#include <algorithm>
#include <cmath>

#include "autodiff/fft.hpp"
#include "common/error.hpp"

namespace mpstep::systems {
namespace {

using Complex = std::complex<double>;
constexpr Complex kI{0.0, 1.0};

}  // namespace

KolmogorovSolver::KolmogorovSolver(const SystemSpec& spec, KolmogorovTerms terms)
    : n_(spec.grid_size()), terms_(terms) {
  spec.validate();
  if (spec.kind != SystemKind::Kolmogorov2d) throw ConfigError("KolmogorovSolver needs a kolmogorov2d spec");
  const double length = spec.param("length");
  const double k0 = 2.0 * M_PI / length;
  dx_ = length / static_cast<double>(n_);
  cfl_max_ = spec.param("cfl_max");
  ic_peak_ = spec.param("ic_peak");
  ic_velocity_ = spec.param("ic_velocity");
  const double nu = terms_.viscosity ? 1.0 / spec.param("re") : 0.0;
  const double drag = terms_.drag ? spec.param("drag") : 0.0;
  const std::size_t nn = n_ * n_;
  kx_.resize(nn);
  ky_.resize(nn);
  k2_.resize(nn);
  mask_.resize(nn);
  linear_.resize(nn);
  const long cutoff = static_cast<long>(n_) / 3;
  const long nyquist = -static_cast<long>(n_) / 2;
  for (std::size_t r = 0; r < n_; ++r) {
    const long iy = fft::wavenumber(r, n_);
    for (std::size_t c = 0; c < n_; ++c) {
      const long ix = fft::wavenumber(c, n_);
      const std::size_t i = r * n_ + c;
      kx_[i] = ix == nyquist ? 0.0 : k0 * static_cast<double>(ix);
      ky_[i] = iy == nyquist ? 0.0 : k0 * static_cast<double>(iy);
      k2_[i] = k0 * k0 * static_cast<double>(ix * ix + iy * iy);
      mask_[i] = (std::abs(ix) <= cutoff && std::abs(iy) <= cutoff) ? 1.0 : 0.0;
      linear_[i] = -nu * k2_[i] - drag;
    }
  }
  const double kf = spec.param("kf") * k0;
  std::vector<double> f(nn);
  for (std::size_t r = 0; r < n_; ++r) {
    const double y = static_cast<double>(r) * dx_;
    for (std::size_t c = 0; c < n_; ++c) f[r * n_ + c] = kf * std::cos(kf * y);
  }
  forcing_hat_ = to_spectral(f);
}

SpectralField KolmogorovSolver::to_spectral(std::span<const double> vorticity) const {
  if (vorticity.size() != n_ * n_) throw ShapeError("vorticity field does not match the solver grid");
  SpectralField out(vorticity.begin(), vorticity.end());
  fft::fft2_inplace(out, 1, n_, n_, false);
  return out;
}

std::vector<double> KolmogorovSolver::to_physical(const SpectralField& w_hat) const {
  SpectralField tmp = w_hat;
  fft::fft2_inplace(tmp, 1, n_, n_, true);
  std::vector<double> out(tmp.size());
  for (std::size_t i = 0; i < tmp.size(); ++i) out[i] = tmp[i].real();
  return out;
}

std::pair<SpectralField, SpectralField> KolmogorovSolver::velocity_hat(const SpectralField& w_hat) const {
  SpectralField u(w_hat.size()), v(w_hat.size());
  for (std::size_t i = 0; i < w_hat.size(); ++i) {
    const Complex psi = k2_[i] > 0.0 ? w_hat[i] / k2_[i] : Complex{};
    u[i] = kI * ky_[i] * psi;
    v[i] = -kI * kx_[i] * psi;
  }
  return {std::move(u), std::move(v)};
}

VelocityField KolmogorovSolver::velocity(const SpectralField& w_hat) const {
  auto [u_hat, v_hat] = velocity_hat(w_hat);
  VelocityField out;
  out.u = to_physical(u_hat);
  out.v = to_physical(v_hat);
  return out;
}

SpectralField KolmogorovSolver::divergence_hat(const SpectralField& u_hat, const SpectralField& v_hat) const {
  SpectralField d(u_hat.size());
  for (std::size_t i = 0; i < d.size(); ++i) d[i] = kI * kx_[i] * u_hat[i] + kI * ky_[i] * v_hat[i];
  return d;
}

double KolmogorovSolver::kinetic_energy(const SpectralField& w_hat) const {
  auto [u_hat, v_hat] = velocity_hat(w_hat);
  double e = 0.0;
  for (std::size_t i = 0; i < w_hat.size(); ++i) e += std::norm(u_hat[i]) + std::norm(v_hat[i]);
  return 0.5 * e / static_cast<double>(n_ * n_);
}

double KolmogorovSolver::max_speed(const SpectralField& w_hat) const {
  const auto vel = velocity(w_hat);
  double m = 0.0;
  for (std::size_t i = 0; i < vel.u.size(); ++i) m = std::max(m, std::abs(vel.u[i]) + std::abs(vel.v[i]));
  return m;
}

double KolmogorovSolver::cfl_number(const SpectralField& w_hat, double dt) const {
  return dt * max_speed(w_hat) / dx_;
}

SpectralField KolmogorovSolver::nonlinear(const SpectralField& w_hat, double* max_speed) const {
  const std::size_t nn = n_ * n_;
  SpectralField out(nn, Complex{});
  if (terms_.nonlinear) {
    // u, v, dw/dx, dw/dy stacked for one batched inverse transform.
    SpectralField buf(4 * nn);
    for (std::size_t i = 0; i < nn; ++i) {
      const Complex w = mask_[i] * w_hat[i];
      const Complex psi = k2_[i] > 0.0 ? w / k2_[i] : Complex{};
      buf[i] = kI * ky_[i] * psi;
      buf[nn + i] = -kI * kx_[i] * psi;
      buf[2 * nn + i] = kI * kx_[i] * w;
      buf[3 * nn + i] = kI * ky_[i] * w;
    }
    fft::fft2_inplace(buf, 4, n_, n_, true);
    SpectralField adv(nn);
    double speed = 0.0;
    for (std::size_t i = 0; i < nn; ++i) {
      const double u = buf[i].real();
      const double v = buf[nn + i].real();
      adv[i] = u * buf[2 * nn + i].real() + v * buf[3 * nn + i].real();
      speed = std::max(speed, std::abs(u) + std::abs(v));
    }
    if (max_speed) *max_speed = speed;
    fft::fft2_inplace(adv, 1, n_, n_, false);
    for (std::size_t i = 0; i < nn; ++i) out[i] = -mask_[i] * adv[i];
  } else if (max_speed) {
    *max_speed = this->max_speed(w_hat);
  }
  if (terms_.forcing) {
    for (std::size_t i = 0; i < nn; ++i) out[i] += forcing_hat_[i];
  }
  return out;
}

SpectralField KolmogorovSolver::step(const SpectralField& w_hat, double dt, std::size_t step_index) const {
  const std::size_t nn = n_ * n_;
  if (w_hat.size() != nn) throw ShapeError("spectral field does not match the solver grid");
  std::vector<double> e(nn), e2(nn);
  for (std::size_t i = 0; i < nn; ++i) {
    e[i] = std::exp(linear_[i] * dt);
    e2[i] = std::exp(linear_[i] * dt * 0.5);
  }
  double speed = 0.0;
  const SpectralField n1 = nonlinear(w_hat, &speed);
  const double cfl = dt * speed / dx_;
  if (cfl > cfl_max_) {
    throw NumericalError("CFL number " + std::to_string(cfl) + " exceeds " + std::to_string(cfl_max_) +
                         " at step " + std::to_string(step_index) + "; use a smaller dt");
  }
  SpectralField stage(nn);
  for (std::size_t i = 0; i < nn; ++i) stage[i] = e2[i] * (w_hat[i] + 0.5 * dt * n1[i]);
  const SpectralField n2 = nonlinear(stage, nullptr);
  for (std::size_t i = 0; i < nn; ++i) stage[i] = e2[i] * w_hat[i] + 0.5 * dt * n2[i];
  const SpectralField n3 = nonlinear(stage, nullptr);
  for (std::size_t i = 0; i < nn; ++i) stage[i] = e[i] * w_hat[i] + e2[i] * dt * n3[i];
  const SpectralField n4 = nonlinear(stage, nullptr);
  SpectralField out(nn);
  for (std::size_t i = 0; i < nn; ++i) {
    out[i] = e[i] * w_hat[i] +
             dt / 6.0 * (e[i] * n1[i] + 2.0 * e2[i] * (n2[i] + n3[i]) + n4[i]);
    if (!std::isfinite(out[i].real()) || !std::isfinite(out[i].imag())) {
      throw NumericalError("non-finite vorticity spectrum at step " + std::to_string(step_index));
    }
  }
  return out;
}

SpectralField KolmogorovSolver::random_initial_condition(Rng& rng) const {
  const std::size_t nn = n_ * n_;
  // Hermitian symmetry comes from drawing a real field and transforming it.
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> noise(nn);
  for (auto& x : noise) x = normal(rng);
  SpectralField w = to_spectral(noise);
  const double k0sq = k2_[1];  // index 1 is the (kx=1, ky=0) mode
  const double peak = ic_peak_;
  for (std::size_t i = 0; i < nn; ++i) {
    const double k = std::sqrt(k2_[i] / k0sq);
    const double amp = k > 0.0 ? k * std::exp(-(k / peak) * (k / peak)) : 0.0;
    w[i] *= amp * mask_[i];
  }
  const double e = kinetic_energy(w);
  const double scale = e > 0.0 ? ic_velocity_ / std::sqrt(2.0 * e) : 0.0;
  for (auto& x : w) x *= scale;
  return w;
}

SpectralField kolmogorov2d_step(const SpectralField& w_hat, const SystemSpec& spec, double dt) {
  return KolmogorovSolver(spec).step(w_hat, dt);
}

std::vector<double> velocity_from_vorticity(std::span<const double> vorticity, const SystemSpec& spec) {
  const KolmogorovSolver solver(spec);
  const auto vel = solver.velocity(solver.to_spectral(vorticity));
  std::vector<double> out(vel.u);
  out.insert(out.end(), vel.v.begin(), vel.v.end());
  return out;
}

}  // namespace mpstep::systems
