#pragma once

// Jump coefficients eps_n, eps_T from Laurent matching of the general
// Riemann-Hilbert solution, the continuous-spectrum coefficient A(eta), and
// reconstruction of h(x, mu).

#include <boost/math/interpolators/makima.hpp>

#include <array>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "kinjump/dispersion.hpp"
#include "kinjump/factorization.hpp"
#include "kinjump/model.hpp"

namespace kinjump {

struct JumpOptions {
  int panels = 72;
  int nodes_per_panel = 16;
  GradingOptions grading{};
  ThetaOptions theta{};
  MatrixVariant variant = MatrixVariant::corrected;
};

struct KLMoments {
  double K1 = 0.0;
  double K0 = 0.0;
  double L1 = 0.0;
  double L0 = 0.0;
  /// Largest |Im| of the four raw complex integrals.
  double max_imag = 0.0;
};

/// K1, K0, L1, L0 by a least-squares fit of K(z), L(z) evaluated directly at
/// large negative z.
struct KLFit {
  KLMoments moments;
  std::vector<double> z;
};

/// Coefficients of z^0..z^3 in (1 - a z)^2 h_as(0, z).
std::array<double, 4> laurent_lhs_coeffs(const AsymptoticState& state, double a, double omega);

/// The determinants printed for the 2x2 system, evaluated as printed (with the
/// undefined V2^+ read as V2*), and the jump coefficients they imply.
struct PrintedDeterminants {
  double Delta = 0.0;
  double Delta_T_U = 0.0;
  double Delta_n_U = 0.0;
  double Delta_T_gT = 0.0;
  double Delta_n_gT = 0.0;
  double eps_T_per_U = 0.0;
  double eps_n_per_U = 0.0;
  double eps_T_per_gT = 0.0;
  double eps_n_per_gT = 0.0;
};

PrintedDeterminants printed_determinants(double a, double omega, const VMoments& v, const VMoments& vs,
                                         const KLMoments& kl);

/// Everything the reconstruction needs for one forcing (U, g_T).
struct FieldCoefficients {
  AsymptoticState state;
  double C0 = 0.0;
  double C1 = 0.0;
};

struct JumpSolution {
  double a = 0.0;
  double omega = 0.0;
  VMoments V;
  VMoments Vs;
  KLMoments kl;
  double theta_winding = 0.0;

  double eps_T_per_U = 0.0;
  double eps_T_per_gT = 0.0;
  double eps_n_per_U = 0.0;
  double eps_n_per_gT = 0.0;
  double C0_per_U = 0.0;
  double C0_per_gT = 0.0;
  double C1_per_gT = 0.0;  // C1 does not depend on U

  /// Determinant of the assembled 2x2 system in (eps_n, eps_T).
  double determinant = 0.0;
  PrintedDeterminants printed;

  /// |M(-1e3)| / 1e3 divided by |M(-1e2)| / 1e2 for unit g_T: close to 1 when
  /// M grows linearly, ~10 if a z^2 term survived.
  double laurent_growth = 0.0;

  FieldCoefficients coefficients(double U, double g_T) const;
};

class SpectralDensity;

class JumpSolver {
 public:
  explicit JumpSolver(double a, const JumpOptions& options = {});

  const GasModel& model() const { return model_; }
  const Dispersion& dispersion() const { return fact_->dispersion(); }
  const Factorization& factorization() const { return *fact_; }
  double alpha() const { return model_.alpha(); }

  KLMoments kl_moments() const;
  KLFit kl_direct_fit(double scale = 1.0) const;
  /// K(z) and L(z) by direct quadrature.
  std::array<cplx, 2> kl_direct(cplx z) const;

  JumpSolution solve() const;

  /// M(z) from the boundary data: -(1 - a z)^2 h_as(0, z) + (C0 + C1 z) / X(z).
  cplx m_from_boundary(cplx z, const FieldCoefficients& f) const;
  /// M(z) from the continuous-spectrum integral.
  cplx m_from_integral(cplx z, const FieldCoefficients& f) const;

  /// W(eta) = (1/X^+ - 1/X^-) / (2 pi i (1 - a eta)^2 Q~(eta, eta)) at the
  /// nodes, in the form that stays finite where Q~(eta, eta) = 0.
  std::span<const cplx> w_nodes() const { return w_; }
  /// The same density at an arbitrary point of (0, alpha).
  cplx w_at(double eta) const;
  /// The literal quotient; 0/0 where theta = pi.
  cplx w_quotient(double eta) const;

  /// A(mu) = -(C0 + C1 mu) mu^2 exp(-V(mu)) cos(theta(mu)) / (1 - a mu)^2.
  double spectral_coefficient(double mu, const FieldCoefficients& f) const;
  /// Same from the complex boundary values (imaginary part is a diagnostic).
  cplx spectral_coefficient_complex(double mu, const FieldCoefficients& f) const;

  SpectralDensity spectral_density(const FieldCoefficients& f) const;

  double reconstruct_h(double x, double mu, const FieldCoefficients& f) const;
  /// h on the tensor grid xs x mus; result[i][j] = h(xs[i], mus[j]).
  std::vector<std::vector<double>> reconstruct_field(std::span<const double> xs, std::span<const double> mus,
                                                     const FieldCoefficients& f) const;

  /// sup |h(0, mu)| over mu_j = alpha_max * j / (n_probe + 1), normalized by
  /// max(|eps_T|, |eps_n|, |2U|, |g_T|).  `alpha_max` defaults to the speed
  /// C = 6, beyond which h_as and A cancel to a relative 1e-16 of C^2.
  double boundary_residual(const FieldCoefficients& f, int n_probe = 200,
                           std::optional<double> mu_max = std::nullopt) const;

 private:
  struct PointData {
    double mu;
    cplx w;  // W(mu)
    std::array<double, 3> minors;
    double theta;
    double v_pv;
  };
  PointData point_data(double mu) const;
  double continuum_integral(double x, double mu, const FieldCoefficients& f,
                            const std::vector<double>& q_nodes, const PointData* pole) const;

  GasModel model_;
  std::unique_ptr<Factorization> fact_;
  std::vector<cplx> w_;
  std::vector<std::array<double, 3>> poly_;  // A2, A1, A0 per node
};

class SpectralDensity {
 public:
  SpectralDensity(std::vector<double> eta, std::vector<double> values, double max_imag);

  std::span<const double> eta() const { return eta_; }
  std::span<const double> values() const { return values_; }
  double max_imag() const { return max_imag_; }
  double operator()(double eta) const;

 private:
  std::vector<double> eta_;
  std::vector<double> values_;
  double max_imag_;
  std::shared_ptr<const boost::math::interpolators::makima<std::vector<double>>> spline_;
};

}  // namespace kinjump
