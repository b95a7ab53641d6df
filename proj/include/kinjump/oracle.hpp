#pragma once

// Direct discrete-ordinates solution of the half-space problem, independent of
// the spectral machinery.  h = h_as(eps) + h~ where h~ satisfies the kinetic
// equation with inflow -h_as(0, mu) at the wall and zero inflow at x = X.
// Sweeps use the linear-characteristic scheme (exact for sources linear in x
// within a cell); the source moments are solved for with GMRES.

#include <Eigen/Dense>

#include <vector>

#include "kinjump/model.hpp"
#include "kinjump/quadrature.hpp"

namespace kinjump {

struct OracleOptions {
  double x_max = 30.0;
  int nx = 600;
  int n_mu = 96;
  int nodes_per_panel = 4;
  double core_speed = 6.0;
  /// x = X expm1(kappa s) / expm1(kappa), s uniform on [0, 1].
  double grading = 5.0;
  /// Relative residual target of each linear solve.
  double tol = 1e-8;
  int max_iterations = 2000;
  int restart = 400;
  /// Largest admissible far-field slope drift or curvature, relative to the
  /// forcing scale, before the slab is declared too short.
  double fit_threshold = 1e-4;
};

/// Far-field fit of the density and temperature moments on x >= 2 X / 3.
struct JumpFit {
  double eps_n = 0.0;
  double eps_T = 0.0;
  double slope_n = 0.0;  // expected -g_T
  double slope_T = 0.0;  // expected +g_T
  double curvature = 0.0;
  double slope_drift = 0.0;
  double rms = 0.0;
};

struct FieldSolution {
  double a = 0.0;
  double U = 0.0;
  double g_T = 0.0;
  std::vector<double> x;
  std::vector<double> mu;
  std::vector<double> weights;
  Eigen::MatrixXd h;  // h(i, j) at x[i], mu[j]
  std::vector<double> density;
  std::vector<double> temperature;
  double eps_n = 0.0;
  double eps_T = 0.0;
  JumpFit fit;
  int iterations = 0;  // GMRES iterations summed over the linear solves
  int linear_solves = 0;
  double residual = 0.0;  // largest relative GMRES residual
  OracleOptions options;
};

/// The discretized problem for one a: ordinates, x grid, sweeps, moments.
class DiscreteOrdinates {
 public:
  DiscreteOrdinates(double a, const OracleOptions& options = {});

  const GasModel& model() const { return model_; }
  const OracleOptions& options() const { return options_; }
  const std::vector<double>& x() const { return x_; }
  const std::vector<double>& mu() const { return mu_; }
  const std::vector<double>& weights() const { return w_; }
  int nx() const { return options_.nx; }
  int n_mu() const { return static_cast<int>(mu_.size()); }

  /// Discrete kernel coefficients: the projection is exact on the ordinates.
  double r0() const { return r_[0]; }
  double r1() const { return r_[1]; }
  double r2() const { return r_[2]; }
  double beta() const { return beta_; }

  /// Collision-invariant moments <psi_k, h>, k = 0..2, at every x (3 x (nx+1)).
  Eigen::MatrixXd moments(const Eigen::MatrixXd& h) const;
  /// Source S(x, mu) = sum_k r_k psi_k(mu) m_k(x).
  Eigen::MatrixXd source(const Eigen::MatrixXd& m) const;
  /// One transport sweep with the given source moments and inflow data.
  /// `left` applies to mu > 0 at x = 0, `right` to mu < 0 at x = X; both are
  /// indexed like mu() and ignored for the other sign.
  Eigen::MatrixXd sweep(const Eigen::MatrixXd& m, const Eigen::VectorXd& left, const Eigen::VectorXd& right) const;

  Eigen::MatrixXd h_asymptotic(const AsymptoticState& s) const;

  struct Perturbation {
    Eigen::MatrixXd h;
    int iterations = 0;
    double residual = 0.0;
  };
  /// Solves for h~ with inflow `left` at the wall and zero at x = X.
  Perturbation solve_perturbation(const Eigen::VectorXd& left) const;

  /// Density and temperature perturbations at every x.
  void moments_nT(const Eigen::MatrixXd& h, std::vector<double>& density, std::vector<double>& temperature) const;

 private:
  GasModel model_;
  OracleOptions options_;
  std::vector<double> x_;
  std::vector<double> mu_;
  std::vector<double> w_;
  std::vector<double> c_;
  std::vector<double> wr_;  // w * rho
  std::array<double, 3> r_{};
  double beta_ = 0.0;
  double gamma_ = 0.0;  // discrete <C^2> under exp(-C^2) dC
  // Per (cell, ordinate) sweep coefficients.
  Eigen::MatrixXd E_, g0_, g1_;
};

/// Least-squares far-field fit.  `g_T` and `scale` (forcing magnitude) set the
/// expected slopes and the drift normalization.  Throws DomainTooShortError
/// when `check` is set and the fit is not cleanly linear.
JumpFit fit_far_field(const std::vector<double>& x, const std::vector<double>& density,
                      const std::vector<double>& temperature, double x_max, double g_T, double scale,
                      double threshold, bool check);

FieldSolution solve_direct(double a, double U, double g_T, const OracleOptions& options = {});

JumpFit extract_jumps(const FieldSolution& field);

struct ConvergenceStudy {
  std::vector<int> nx;
  std::vector<double> eps_n;
  std::vector<double> eps_T;
  double order_n = 0.0;
  double order_T = 0.0;
};

/// Runs solve_direct at nx, 2 nx, 4 nx (fixed ordinates) and reports the
/// observed order log2(|e1 - e2| / |e2 - e3|).
ConvergenceStudy convergence_order(double a, double U, double g_T, const OracleOptions& base);

}  // namespace kinjump
