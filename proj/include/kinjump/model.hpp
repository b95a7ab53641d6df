#pragma once

// Dimensionless one-dimensional BGK model with collision frequency affine in
// the molecular speed: nu(C) = nu0 * (1 + a |C|).  Every function here takes
// the slope `a` in the rescaled convention used by the spectral theory; the
// only way in from the physical slope is rescale_slope().

#include <array>
#include <functional>
#include <limits>

#include "kinjump/quadrature.hpp"

namespace kinjump {

/// Boltzmann constant (J/K).
inline constexpr double kBoltzmann = 1.380649e-23;

/// Dimensional state of the wall and gas.  Lengths are measured in mean free
/// paths l = v_T / nu0 and velocities in v_T = 1 / sqrt(m / (2 k_B T_s)).
struct PhysicalScaling {
  double surface_temperature;  // K
  double saturated_density;    // 1/m
  double molecule_mass;        // kg
  double base_frequency;       // 1/s

  void validate() const;
  double beta_s() const;            // s^2/m^2
  double thermal_velocity() const;  // m/s
  double mean_free_path() const;    // m

  double to_dimensionless_length(double x_m) const { return x_m / mean_free_path(); }
  double from_dimensionless_length(double x) const { return x * mean_free_path(); }
  double to_dimensionless_velocity(double u) const { return u / thermal_velocity(); }
  double from_dimensionless_velocity(double u) const { return u * thermal_velocity(); }
  /// G_T = dT/dx far from the wall (K/m) -> g_T = d ln T / dx in units of 1/l.
  double to_dimensionless_gradient(double grad_T) const {
    return grad_T * mean_free_path() / surface_temperature;
  }
};

/// sqrt(pi) * a_physical.  Throws DomainError for negative input.
double rescale_slope(double a_physical);

struct KernelCoeffs {
  double r0;
  double r1;
  double r2;
  double beta;
};

KernelCoeffs kernel_coeffs(double a);

/// Far-field (Chapman-Enskog) parameters.  Linearity needs |U|, |g_T| << 1;
/// nothing here enforces it.
struct AsymptoticState {
  double eps_n = 0.0;
  double eps_T = 0.0;
  double U = 0.0;
  double g_T = 0.0;
};

/// omega(a) by quadrature in the mu variable over the cut grid (a > 0).
double omega_mu_form(double a, const CutGrid& grid);
/// omega(a) by adaptive quadrature in the speed variable; valid for a >= 0.
double omega_c_form(double a);

class GasModel {
 public:
  /// `a` is the rescaled slope, a >= 0.  a = 0 gives an infinite cut.
  explicit GasModel(double a);

  double slope() const { return a_; }
  /// Cut half-length 1/a (infinity when a = 0).
  double alpha() const { return alpha_; }
  const KernelCoeffs& coeffs() const { return coeffs_; }
  double r0() const { return coeffs_.r0; }
  double r1() const { return coeffs_.r1; }
  double r2() const { return coeffs_.r2; }
  double beta() const { return coeffs_.beta; }
  double omega() const { return omega_; }

  /// C(mu) = mu / (1 - a|mu|); DomainError unless |mu| < alpha.
  double c_of_mu(double mu) const;
  double mu_of_c(double c) const;
  /// rho(mu) = exp(-C^2) / (1 - a|mu|)^3, zero at the endpoints.
  double weight(double mu) const;
  /// q(mu, mu') = r0 + r1 C C' + r2 (C^2 - beta)(C'^2 - beta).
  double kernel(double mu, double mu_prime) const;
  double h_asymptotic(double x, double mu, const AsymptoticState& state) const;
  /// The four exact solutions of the transport equation attached to the
  /// point at infinity: 1, C, C^2 - 1/2 and (x - mu)(C^2 - 3/2), k = 0..3.
  double partial_solution(int k, double x, double mu) const;

 private:
  double a_;
  double alpha_;
  KernelCoeffs coeffs_;
  double omega_;
};

/// Kh = c0 + c1 C(mu) + c2 (C(mu)^2 - beta): the collision projection of h.
struct Projection {
  double c0 = 0.0;
  double c1 = 0.0;
  double c2 = 0.0;
  double beta = 0.0;

  double operator()(double c) const { return c0 + c1 * c + c2 * (c * c - beta); }
};

/// Projection of h(mu) on span{1, C, C^2 - beta} with weight rho.
Projection project(const std::function<double(double)>& h, const GasModel& model, const CutGrid& grid);

/// <psi, h>_rho for psi in {1, C, C^2 - beta}.
std::array<double, 3> invariant_moments(const std::function<double(double)>& h, const GasModel& model,
                                        const CutGrid& grid);

/// mu dh/dx + h - Kh at (x, mu).  The x-derivative is a five-point central
/// difference with step `dx`.
double transport_residual(const std::function<double(double, double)>& h, double x, double mu,
                          const GasModel& model, const CutGrid& grid, double dx = 1e-3);

}  // namespace kinjump
