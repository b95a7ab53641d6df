#pragma once

// t-moments, the 3x3 dispersion matrix, its determinant lambda(z) and boundary
// values on the cut, the minors Lambda_0..2, Q~(eta, mu) and the continuous
// argument theta of lambda^+ on (0, alpha).

#include <Eigen/Dense>
#include <boost/math/interpolators/barycentric_rational.hpp>

#include <array>
#include <complex>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "kinjump/model.hpp"
#include "kinjump/quadrature.hpp"

namespace kinjump {

using cplx = std::complex<double>;
using TMoments = std::array<cplx, 5>;
using Matrix3c = Eigen::Matrix3cd;

/// Which transcription of the matrix entries to assemble.  `corrected` is the
/// one the column structure implies; the others reproduce the printed entries
/// and exist so the Sokhotsky check can tell them apart.
///   printed_lambda11: lambda_11 with r2 in place of r0
///   printed_lambda22: lambda_22 = 1 + r1 t3 instead of 1 + r1 t2
///   printed:          both of the above
enum class MatrixVariant { corrected, printed_lambda11, printed_lambda22, printed };

std::string_view to_string(MatrixVariant v);
MatrixVariant matrix_variant_from_string(std::string_view s);

enum class Side { plus = 1, minus = -1 };

struct DispersionSample {
  cplx z;
  bool on_cut = false;
  Side side = Side::plus;  // meaningful only when on_cut
  TMoments t{};
  Matrix3c lam;
  cplx lam_det;
  std::array<cplx, 3> minors{};
};

struct Eigenfunction {
  double regular;  // eta rho(eta) Q~(eta, mu) / (lambda(eta) (eta - mu))
  double delta;    // coefficient of delta(eta - mu)
};

class Dispersion {
 public:
  Dispersion(const GasModel& model, CutGrid grid, MatrixVariant variant = MatrixVariant::corrected);

  const GasModel& model() const { return model_; }
  const CutGrid& grid() const { return grid_; }
  MatrixVariant variant() const { return variant_; }
  double alpha() const { return model_.alpha(); }

  /// t_n(z) = z * integral C^n rho / (mu - z).  z must be off the cut.
  TMoments t_moments(cplx z) const;
  /// Principal-value t_n at a real point of the open cut.
  std::array<double, 5> t_moments_pv(double eta) const;
  /// t_n^{+/-}(eta) = t_n(eta) +/- i pi eta C^n(eta) rho(eta).
  TMoments t_boundary(double eta, Side side) const;

  Matrix3c matrix(const TMoments& t) const;
  /// Determinant by the six-term expansion.
  static cplx det_expanded(const Matrix3c& m);
  /// Determinant by LU factorization.
  static cplx det_generic(const Matrix3c& m);

  cplx lambda(cplx z) const;
  double lambda_pv(double eta) const;
  cplx lambda_boundary(double eta, Side side) const;

  /// Lambda_alpha at eta on the cut (principal-value matrix) by explicit
  /// cofactors.
  std::array<double, 3> minors(double eta) const;
  /// Same quantity by solving Lambda n = lambda (1, C, C^2).
  std::array<double, 3> minors_cramer(double eta) const;

  /// Q~(eta, mu) from precomputed minors; `c_mu` is C(mu) (or its continuation).
  template <class T>
  T q_tilde_from(const std::array<double, 3>& m, T c_mu) const {
    const auto& k = model_.coeffs();
    return k.r0 * m[0] + k.r1 * c_mu * m[1] + k.r2 * (c_mu * c_mu - k.beta) * (m[2] - k.beta * m[0]);
  }
  double q_tilde(double eta, double mu) const;
  /// Q~(eta, z) with C(z) = z / (1 - a z), the continuation used with the
  /// (1 - a z)^2 factor.
  cplx q_tilde_z(double eta, cplx z) const;

  Eigenfunction eigenfunction(double eta, double mu) const;

  DispersionSample sample(cplx z) const;
  DispersionSample sample_boundary(double eta, Side side) const;

  /// Throws DomainError when eta is not inside (1e-9 alpha, alpha (1 - 1e-9)).
  void check_cut_point(double eta) const;

 private:
  Matrix3c matrix_pv(double eta) const;

  GasModel model_;
  CutGrid grid_;
  MatrixVariant variant_;
  // C^n rho at the nodes, n = 0..4.
  std::array<std::vector<double>, 5> cn_rho_;
};

struct ThetaOptions {
  int n_samples = 1500;
  int max_bisections = 30;
  double max_step = 1.5707963267948966;  // pi / 2
  double winding_tolerance = 1e-3;
  bool check_winding = true;
};

/// Continuous argument of lambda^+ on (0, alpha), anchored at theta(0+) = 0.
class ThetaTable {
 public:
  static ThetaTable build(const Dispersion& d, const ThetaOptions& options = {});

  std::span<const double> eta() const { return eta_; }
  std::span<const double> theta() const { return theta_; }
  double alpha() const { return alpha_; }
  /// theta just inside the right end of the cut.
  double theta_end() const { return theta_end_; }
  double theta_start() const { return theta_.front(); }
  std::size_t refinements() const { return refinements_; }

  /// Barycentric rational (Floater-Hormann, order 3) interpolant of the table.
  double interpolate(double eta) const;
  /// Exact branch: arg lambda^+(eta) shifted by the multiple of 2 pi closest
  /// to the interpolant.
  double exact(const Dispersion& d, double eta) const;
  /// Same, with lambda^+(eta) already computed.
  double branch(double eta, cplx lambda_plus) const;

 private:
  std::vector<double> eta_;
  std::vector<double> theta_;
  std::shared_ptr<const boost::math::barycentric_rational<double>> spline_;
  double alpha_ = 0.0;
  double theta_end_ = 0.0;
  std::size_t refinements_ = 0;
};

}  // namespace kinjump
