#pragma once

// Canonical solution X(z) = exp(V(z)) / z^2 of the homogeneous problem
// X^+ / X^- = lambda^+ / lambda^- on (0, alpha).

#include <array>
#include <complex>
#include <vector>

#include "kinjump/dispersion.hpp"

namespace kinjump {

struct VMoments {
  double V1 = 0.0;
  double V2 = 0.0;
  double V3 = 0.0;
};

/// Coefficients of exp(-V(z)) = 1 + V1s/z + V2s/z^2 + V3s/z^3 + ...
VMoments v_star(const VMoments& v);

class Factorization {
 public:
  /// Evaluates theta, lambda^+ and the minors at the nodes of the positive
  /// half of the dispersion grid.  The quadrature for everything below runs on
  /// those nodes.
  Factorization(const Dispersion& d, ThetaTable table);

  const Dispersion& dispersion() const { return d_; }
  const ThetaTable& theta_table() const { return table_; }
  const CutGrid& half_grid() const { return half_; }
  double alpha() const { return d_.alpha(); }

  std::span<const double> nodes() const { return half_.nodes(); }
  std::span<const double> weights() const { return half_.weights(); }
  std::span<const double> theta_nodes() const { return theta_; }
  std::span<const double> v_pv_nodes() const { return v_pv_; }
  std::span<const cplx> lambda_plus_nodes() const { return lam_plus_; }
  const std::vector<std::array<double, 3>>& minors_nodes() const { return minors_; }

  /// theta at an arbitrary point of (0, alpha), on the table's branch.
  double theta(double mu) const;

  /// V(z) = (1/pi) integral_0^alpha (theta - 2 pi) / (mu - z); z off [0, alpha].
  cplx V(cplx z) const;
  /// Principal value of V on the cut.
  double V_pv(double mu) const;
  /// V_pv when theta(mu) is already known.
  double V_pv(double mu, double theta_mu) const;
  cplx V_boundary(double mu, Side side) const;

  cplx X(cplx z) const;
  cplx X_boundary(double mu, Side side) const;

  /// V_n = -(1/pi) integral_0^alpha tau^(n-1) (theta - 2 pi).
  VMoments v_moments() const;

  /// 1/X^+ - 1/X^- in closed form: -2 i mu^2 exp(-V(mu)) sin(theta - 2 pi).
  cplx x_reciprocal_jump(double mu) const;
  /// The same difference from the two boundary values of X.
  cplx x_reciprocal_jump_direct(double mu) const;

 private:
  Dispersion d_;
  ThetaTable table_;
  CutGrid half_;
  std::vector<double> theta_;
  std::vector<double> density_;  // (theta - 2 pi) / pi
  std::vector<double> v_pv_;
  std::vector<cplx> lam_plus_;
  std::vector<std::array<double, 3>> minors_;
};

}  // namespace kinjump
