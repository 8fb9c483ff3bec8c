#pragma once

#include <complex>
#include <span>
#include <vector>

#include "common/rng.hpp"
#include "systems/system_spec.hpp"

namespace mpstep::systems {

using SpectralField = std::vector<std::complex<double>>;

// Terms of the vorticity equation; tests switch individual terms off.
struct KolmogorovTerms {
  bool nonlinear = true;
  bool forcing = true;
  bool viscosity = true;
  bool drag = true;
};

struct VelocityField {
  std::vector<double> u;  // x component, [N x N], row index is y
  std::vector<double> v;  // y component
};

// Pseudo-spectral solver for 2-D incompressible Navier-Stokes in vorticity form
// on a doubly periodic square:
//
//   dw/dt + u . grad(w) = (1/Re) lap(w) - drag * w + kf cos(kf y)
//
// The advection term is evaluated in physical space with 2/3-rule dealiasing;
// the linear terms are integrated exactly through an integrating factor and
// the rest with classical RK4. Fields are row-major [N x N] with rows along y.
class KolmogorovSolver {
 public:
  explicit KolmogorovSolver(const SystemSpec& spec, KolmogorovTerms terms = {});

  std::size_t n() const { return n_; }

  // One integrating-factor RK4 step. Throws NumericalError on a CFL violation
  // or a non-finite spectrum.
  SpectralField step(const SpectralField& w_hat, double dt, std::size_t step_index = 0) const;

  SpectralField to_spectral(std::span<const double> vorticity) const;
  std::vector<double> to_physical(const SpectralField& w_hat) const;

  // Velocity from the streamfunction: u = d(psi)/dy, v = -d(psi)/dx.
  std::pair<SpectralField, SpectralField> velocity_hat(const SpectralField& w_hat) const;
  VelocityField velocity(const SpectralField& w_hat) const;

  // Spectral divergence i kx u_hat + i ky v_hat.
  SpectralField divergence_hat(const SpectralField& u_hat, const SpectralField& v_hat) const;

  // Domain mean of (u^2 + v^2) / 2.
  double kinetic_energy(const SpectralField& w_hat) const;
  double cfl_number(const SpectralField& w_hat, double dt) const;

  // Random band-limited vorticity with spectral peak at ic_peak and RMS
  // velocity ic_velocity.
  SpectralField random_initial_condition(Rng& rng) const;

  std::span<const double> dealias_mask() const { return mask_; }

 private:
  SpectralField nonlinear(const SpectralField& w_hat, double* max_speed) const;
  double max_speed(const SpectralField& w_hat) const;

  std::size_t n_;
  double dx_;
  double cfl_max_;
  double ic_peak_;
  double ic_velocity_;
  KolmogorovTerms terms_;
  std::vector<double> kx_, ky_;  // derivative wavenumbers, Nyquist zeroed
  std::vector<double> k2_;       // |k|^2
  std::vector<double> mask_;
  std::vector<double> linear_;   // -(1/Re)|k|^2 - drag
  SpectralField forcing_hat_;
};

// Stateless convenience wrapper around KolmogorovSolver::step.
SpectralField kolmogorov2d_step(const SpectralField& w_hat, const SystemSpec& spec, double dt);

// Physical velocity [2 x N x N] (u block then v block) from physical vorticity.
std::vector<double> velocity_from_vorticity(std::span<const double> vorticity,
                                            const SystemSpec& spec);

}  // namespace mpstep::systems
