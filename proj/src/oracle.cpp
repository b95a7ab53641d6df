#include "kinjump/oracle.hpp"

#include <Eigen/Core>
#include <Eigen/Sparse>
#include <unsupported/Eigen/IterativeSolvers>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "kinjump/errors.hpp"

namespace kinjump {

namespace {

// Matrix-free operator I - T, where T maps source moments to the moments of
// the swept field with zero inflow.
class SweepOperator;

}  // namespace
}  // namespace kinjump

namespace Eigen::internal {
template <>
struct traits<kinjump::SweepOperator> : public Eigen::internal::traits<Eigen::SparseMatrix<double>> {};
}  // namespace Eigen::internal

namespace kinjump {
namespace {

class SweepOperator : public Eigen::EigenBase<SweepOperator> {
 public:
  using Scalar = double;
  using RealScalar = double;
  using StorageIndex = int;
  enum { ColsAtCompileTime = Eigen::Dynamic, MaxColsAtCompileTime = Eigen::Dynamic, IsRowMajor = false };

  explicit SweepOperator(const DiscreteOrdinates& p) : p_(&p), n_(3 * (p.nx() + 1)) {}

  Eigen::Index rows() const { return n_; }
  Eigen::Index cols() const { return n_; }

  template <typename Rhs>
  Eigen::Product<SweepOperator, Rhs, Eigen::AliasFreeProduct> operator*(const Eigen::MatrixBase<Rhs>& x) const {
    return Eigen::Product<SweepOperator, Rhs, Eigen::AliasFreeProduct>(*this, x.derived());
  }

  Eigen::VectorXd apply(const Eigen::VectorXd& v) const {
    const Eigen::Map<const Eigen::MatrixXd> m(v.data(), 3, p_->nx() + 1);
    const Eigen::VectorXd zero = Eigen::VectorXd::Zero(p_->n_mu());
    const Eigen::MatrixXd out = p_->moments(p_->sweep(m, zero, zero));
    return v - Eigen::Map<const Eigen::VectorXd>(out.data(), out.size());
  }

 private:
  const DiscreteOrdinates* p_;
  Eigen::Index n_;
};

}  // namespace
}  // namespace kinjump

namespace Eigen::internal {
template <typename Rhs>
struct generic_product_impl<kinjump::SweepOperator, Rhs, SparseShape, DenseShape, GemvProduct>
    : generic_product_impl_base<kinjump::SweepOperator, Rhs,
                                generic_product_impl<kinjump::SweepOperator, Rhs>> {
  using Scalar = typename Product<kinjump::SweepOperator, Rhs>::Scalar;
  template <typename Dest>
  static void scaleAndAddTo(Dest& dst, const kinjump::SweepOperator& lhs, const Rhs& rhs, const Scalar& alpha) {
    dst.noalias() += alpha * lhs.apply(rhs);
  }
};
}  // namespace Eigen::internal

namespace kinjump {

DiscreteOrdinates::DiscreteOrdinates(double a, const OracleOptions& options) : model_(a), options_(options) {
  if (!(a > 0.0)) throw DomainError("oracle: needs a > 0");
  if (!(options.x_max > 0.0)) throw DomainError("oracle: x_max must be positive");
  if (options.nx < 4) throw DomainError("oracle: nx must be at least 4");
  if (options.nodes_per_panel < 1 || options.n_mu % (2 * options.nodes_per_panel) != 0) {
    throw DomainError("oracle: n_mu must be a multiple of 2 * nodes_per_panel");
  }
  const int panels = options.n_mu / options.nodes_per_panel;
  if (panels < 4) throw DomainError("oracle: n_mu too small for the ordinate layout");
  GradingOptions grading;
  grading.core_speed = options.core_speed;
  grading.endpoint_levels = 0;
  grading.origin_levels = 0;
  const CutGrid grid = build_grid(model_.alpha(), panels, options.nodes_per_panel, grading);
  mu_.assign(grid.nodes().begin(), grid.nodes().end());
  w_.assign(grid.weights().begin(), grid.weights().end());
  const std::size_t n = mu_.size();
  c_.resize(n);
  wr_.resize(n);
  double s0 = 0.0, s2 = 0.0, e0 = 0.0, e2 = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    c_[j] = model_.c_of_mu(mu_[j]);
    wr_[j] = w_[j] * model_.weight(mu_[j]);
    s0 += wr_[j];
    s2 += wr_[j] * c_[j] * c_[j];
    const double e = wr_[j] * (1.0 - a * std::abs(mu_[j]));
    e0 += e;
    e2 += e * c_[j] * c_[j];
  }
  beta_ = s2 / s0;
  double s22 = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    const double p = c_[j] * c_[j] - beta_;
    s22 += wr_[j] * p * p;
  }
  r_ = {1.0 / s0, 1.0 / s2, 1.0 / s22};
  gamma_ = e2 / e0;

  const int nx = options.nx;
  x_.resize(nx + 1);
  const double k = options.grading;
  for (int i = 0; i <= nx; ++i) {
    const double s = static_cast<double>(i) / nx;
    x_[i] = k > 0.0 ? options.x_max * std::expm1(k * s) / std::expm1(k) : options.x_max * s;
  }
  x_[nx] = options.x_max;

  E_.resize(nx, n);
  g0_.resize(nx, n);
  g1_.resize(nx, n);
  for (std::size_t j = 0; j < n; ++j) {
    for (int i = 0; i < nx; ++i) {
      const double tau = (x_[i + 1] - x_[i]) / std::abs(mu_[j]);
      const double g0 = -std::expm1(-tau);
      E_(i, j) = std::exp(-tau);
      g0_(i, j) = g0;
      g1_(i, j) = tau > 1e-4 ? 1.0 - g0 / tau : tau / 2.0 - tau * tau / 6.0 + tau * tau * tau / 24.0;
    }
  }
}

Eigen::MatrixXd DiscreteOrdinates::moments(const Eigen::MatrixXd& h) const {
  const Eigen::Index nxp = h.rows();
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(3, nxp);
  for (std::size_t j = 0; j < mu_.size(); ++j) {
    const double p0 = wr_[j];
    const double p1 = wr_[j] * c_[j];
    const double p2 = wr_[j] * (c_[j] * c_[j] - beta_);
    const auto col = h.col(static_cast<Eigen::Index>(j));
    m.row(0) += p0 * col.transpose();
    m.row(1) += p1 * col.transpose();
    m.row(2) += p2 * col.transpose();
  }
  return m;
}

Eigen::MatrixXd DiscreteOrdinates::source(const Eigen::MatrixXd& m) const {
  Eigen::MatrixXd S(m.cols(), static_cast<Eigen::Index>(mu_.size()));
  for (std::size_t j = 0; j < mu_.size(); ++j) {
    const double c = c_[j];
    S.col(static_cast<Eigen::Index>(j)) =
        (r_[0] * m.row(0) + r_[1] * c * m.row(1) + r_[2] * (c * c - beta_) * m.row(2)).transpose();
  }
  return S;
}

Eigen::MatrixXd DiscreteOrdinates::sweep(const Eigen::MatrixXd& m, const Eigen::VectorXd& left,
                                         const Eigen::VectorXd& right) const {
  const int nx = options_.nx;
  const Eigen::MatrixXd S = source(m);
  Eigen::MatrixXd h(nx + 1, static_cast<Eigen::Index>(mu_.size()));
  for (std::size_t jj = 0; jj < mu_.size(); ++jj) {
    const auto j = static_cast<Eigen::Index>(jj);
    if (mu_[jj] > 0.0) {
      h(0, j) = left(j);
      for (int i = 0; i < nx; ++i) {
        h(i + 1, j) = E_(i, j) * h(i, j) + (g0_(i, j) - g1_(i, j)) * S(i, j) + g1_(i, j) * S(i + 1, j);
      }
    } else {
      h(nx, j) = right(j);
      for (int i = nx - 1; i >= 0; --i) {
        h(i, j) = E_(i, j) * h(i + 1, j) + (g0_(i, j) - g1_(i, j)) * S(i + 1, j) + g1_(i, j) * S(i, j);
      }
    }
  }
  return h;
}

Eigen::MatrixXd DiscreteOrdinates::h_asymptotic(const AsymptoticState& s) const {
  Eigen::MatrixXd h(options_.nx + 1, static_cast<Eigen::Index>(mu_.size()));
  for (int i = 0; i <= options_.nx; ++i) {
    for (std::size_t j = 0; j < mu_.size(); ++j) h(i, static_cast<Eigen::Index>(j)) = model_.h_asymptotic(x_[i], mu_[j], s);
  }
  return h;
}

DiscreteOrdinates::Perturbation DiscreteOrdinates::solve_perturbation(const Eigen::VectorXd& left) const {
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(n_mu());
  const int nxp = options_.nx + 1;
  Perturbation out;
  const Eigen::MatrixXd m0 = moments(sweep(Eigen::MatrixXd::Zero(3, nxp), left, zero));
  const Eigen::VectorXd b = Eigen::Map<const Eigen::VectorXd>(m0.data(), m0.size());
  Eigen::VectorXd sol = Eigen::VectorXd::Zero(b.size());
  if (b.norm() > 0.0) {
    SweepOperator op(*this);
    Eigen::GMRES<SweepOperator, Eigen::IdentityPreconditioner> gmres;
    gmres.setTolerance(options_.tol);
    gmres.setMaxIterations(options_.max_iterations);
    gmres.set_restart(options_.restart);
    gmres.compute(op);
    sol = gmres.solve(b);
    out.iterations = static_cast<int>(gmres.iterations());
    out.residual = gmres.error();
    if (gmres.info() != Eigen::Success) {
      std::ostringstream os;
      os.precision(3);
      os << "oracle: GMRES did not converge (" << gmres.iterations() << " iterations, relative residual "
         << gmres.error() << ")";
      throw ConvergenceError(os.str());
    }
  }
  const Eigen::Map<const Eigen::MatrixXd> m(sol.data(), 3, nxp);
  out.h = sweep(m, left, zero);
  return out;
}

void DiscreteOrdinates::moments_nT(const Eigen::MatrixXd& h, std::vector<double>& density,
                                   std::vector<double>& temperature) const {
  const double a = model_.slope();
  double e0 = 0.0, eT = 0.0;
  Eigen::VectorXd en(n_mu()), et(n_mu());
  for (int j = 0; j < n_mu(); ++j) {
    const double e = wr_[j] * (1.0 - a * std::abs(mu_[j]));
    en(j) = e;
    et(j) = e * (c_[j] * c_[j] - gamma_);
    e0 += e;
    eT += et(j) * c_[j] * c_[j];
  }
  const Eigen::VectorXd n_avg = h * en / e0;
  const Eigen::VectorXd t_avg = h * et / eT;
  density.resize(h.rows());
  temperature.resize(h.rows());
  for (Eigen::Index i = 0; i < h.rows(); ++i) {
    temperature[i] = t_avg(i);
    // Reduces to <h> in the continuum limit where gamma = 1/2; the correction
    // makes the estimator exact for h_as on the discrete ordinates.
    density[i] = n_avg(i) - (gamma_ - 0.5) * t_avg(i);
  }
}

JumpFit fit_far_field(const std::vector<double>& x, const std::vector<double>& density,
                      const std::vector<double>& temperature, double x_max, double g_T, double scale,
                      double threshold, bool check) {
  std::vector<std::size_t> sel;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i] >= 2.0 * x_max / 3.0) sel.push_back(i);
  }
  if (sel.size() < 4) throw DomainError("fit_far_field: fewer than four points in the fit window");
  const auto m = static_cast<Eigen::Index>(sel.size());
  Eigen::MatrixXd A1(m, 2), A2(m, 3), b(m, 2);
  for (Eigen::Index k = 0; k < m; ++k) {
    const double xi = x[sel[k]];
    A1(k, 0) = 1.0;
    A1(k, 1) = xi;
    A2(k, 0) = 1.0;
    A2(k, 1) = xi;
    A2(k, 2) = xi * xi;
    b(k, 0) = density[sel[k]];
    b(k, 1) = temperature[sel[k]];
  }
  const Eigen::MatrixXd lin = A1.colPivHouseholderQr().solve(b);
  const Eigen::MatrixXd quad = A2.colPivHouseholderQr().solve(b);
  JumpFit f;
  f.eps_n = lin(0, 0);
  f.eps_T = lin(0, 1);
  f.slope_n = lin(1, 0);
  f.slope_T = lin(1, 1);
  const double window = x_max / 3.0;
  const double s = scale > 0.0 ? scale : 1.0;
  f.curvature = std::max(std::abs(quad(2, 0)), std::abs(quad(2, 1))) * window * window / s;
  f.slope_drift = std::max(std::abs(f.slope_T - g_T), std::abs(f.slope_n + g_T)) * x_max / s;
  const Eigen::MatrixXd res = A1 * lin - b;
  f.rms = std::sqrt(res.squaredNorm() / (2.0 * m)) / s;
  if (check && scale > 0.0 && std::max(f.curvature, f.slope_drift) > threshold) {
    std::ostringstream os;
    os.precision(3);
    os << "domain-too-short: far-field moments are not linear on [" << 2.0 * x_max / 3.0 << ", " << x_max
       << "] (slope drift " << f.slope_drift << ", curvature " << f.curvature << ", threshold " << threshold
       << "); increase x_max";
    throw DomainTooShortError(os.str());
  }
  return f;
}

FieldSolution solve_direct(double a, double U, double g_T, const OracleOptions& options) {
  const DiscreteOrdinates p(a, options);
  FieldSolution out;
  out.a = a;
  out.U = U;
  out.g_T = g_T;
  out.x = p.x();
  out.mu = p.mu();
  out.weights = p.weights();
  out.options = options;
  const double scale = std::max(std::abs(U), std::abs(g_T));
  const int n = p.n_mu();
  if (scale == 0.0) {
    out.h = Eigen::MatrixXd::Zero(options.nx + 1, n);
    p.moments_nT(out.h, out.density, out.temperature);
    out.fit = fit_far_field(out.x, out.density, out.temperature, options.x_max, 0.0, 0.0, options.fit_threshold,
                            false);
    out.iterations = 1;
    return out;
  }

  // h = h_as(eps) + h0 + eps_n hn + eps_T hT, where the three perturbations
  // carry the wall inflow of the forcing part and of the two jump modes.
  const GasModel& model = p.model();
  AsymptoticState forcing;
  forcing.U = U;
  forcing.g_T = g_T;
  Eigen::VectorXd left0(n), leftn(n), leftT(n);
  for (int j = 0; j < n; ++j) {
    const double mu = p.mu()[j];
    const double c = model.c_of_mu(mu);
    left0(j) = -model.h_asymptotic(0.0, mu, forcing);
    leftn(j) = -1.0;
    leftT(j) = -(c * c - 0.5);
  }
  std::array<DiscreteOrdinates::Perturbation, 3> parts = {p.solve_perturbation(left0), p.solve_perturbation(leftn),
                                                         p.solve_perturbation(leftT)};
  std::array<JumpFit, 3> fits;
  for (int k = 0; k < 3; ++k) {
    std::vector<double> dn, dt;
    p.moments_nT(parts[k].h, dn, dt);
    fits[k] = fit_far_field(out.x, dn, dt, options.x_max, 0.0, 1.0, options.fit_threshold, false);
    out.iterations += parts[k].iterations;
    out.residual = std::max(out.residual, parts[k].residual);
  }
  out.linear_solves = 3;
  // Far-field offsets of the perturbations must vanish:
  // F0 + eps_n Fn + eps_T FT = 0 for both moments.
  Eigen::Matrix2d M;
  M << fits[1].eps_n, fits[2].eps_n, fits[1].eps_T, fits[2].eps_T;
  const Eigen::Vector2d eps = M.partialPivLu().solve(Eigen::Vector2d(-fits[0].eps_n, -fits[0].eps_T));
  AsymptoticState s = forcing;
  s.eps_n = eps(0);
  s.eps_T = eps(1);
  out.h = p.h_asymptotic(s) + parts[0].h + eps(0) * parts[1].h + eps(1) * parts[2].h;
  p.moments_nT(out.h, out.density, out.temperature);
  out.fit = fit_far_field(out.x, out.density, out.temperature, options.x_max, g_T, scale, options.fit_threshold,
                          true);
  out.eps_n = out.fit.eps_n;
  out.eps_T = out.fit.eps_T;
  return out;
}

JumpFit extract_jumps(const FieldSolution& field) {
  const double scale = std::max(std::abs(field.U), std::abs(field.g_T));
  return fit_far_field(field.x, field.density, field.temperature, field.options.x_max, field.g_T, scale,
                       field.options.fit_threshold, true);
}

ConvergenceStudy convergence_order(double a, double U, double g_T, const OracleOptions& base) {
  ConvergenceStudy st;
  for (int k = 0; k < 3; ++k) {
    OracleOptions o = base;
    o.nx = base.nx << k;
    const FieldSolution f = solve_direct(a, U, g_T, o);
    st.nx.push_back(o.nx);
    st.eps_n.push_back(f.eps_n);
    st.eps_T.push_back(f.eps_T);
  }
  auto order = [](const std::vector<double>& e) {
    return std::log2(std::abs(e[0] - e[1]) / std::abs(e[1] - e[2]));
  };
  st.order_n = order(st.eps_n);
  st.order_T = order(st.eps_T);
  return st;
}

}  // namespace kinjump
