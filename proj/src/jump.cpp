#include "kinjump/jump.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "kinjump/errors.hpp"

namespace kinjump {

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;
}  // namespace

std::array<double, 4> laurent_lhs_coeffs(const AsymptoticState& s, double a, double omega) {
  const double en = s.eps_n, eT = s.eps_T, U = s.U, g = s.g_T;
  std::array<double, 4> p{};
  p[3] = g * (1.5 * a * a - 1.0);
  p[2] = a * a * en + (1.0 - 0.5 * a * a) * eT - 2.0 * a * U - a * (omega + 3.0) * g;
  p[1] = -2.0 * a * en + a * eT + 2.0 * U + (omega + 1.5) * g;
  p[0] = en - 0.5 * eT;
  return p;
}

PrintedDeterminants printed_determinants(double a, double omega, const VMoments& v, const VMoments& vs,
                                         const KLMoments& kl) {
  const double S1 = v.V1 + kl.K1;
  const double S0 = vs.V2 - kl.K0;
  const double c1 = 1.5 * a * a - 1.0;
  PrintedDeterminants p;
  p.Delta = S1 - 2.0 * a * S0;
  p.Delta_T_U = -1.0 + a * S1 - a * a * S0;
  p.Delta_n_U = -0.5 + 0.5 * a * S1 - (1.0 + 0.5 * a * a) * S0;
  p.Delta_T_gT = (1.0 - a * a * S0) * (c1 * (vs.V2 - kl.L1) - omega - 1.5) +
                 (c1 * v.V1 - 3.0 * a - omega) * (2.0 * a * S0 - S1) + c1 * (vs.V3 - kl.L0) * (2.0 * a - a * a * S1);
  p.Delta_n_gT = -(a + (1.0 - 0.5 * a * a) * S1) *
                     ((3.0 * a + omega) * S0 - c1 * (vs.V3 - kl.L0 + v.V1 * vs.V2 - v.V1 * kl.K0)) -
                 (0.5 + (1.0 - 0.5 * a * a) * S0) *
                     (1.5 + omega + c1 * (kl.L1 - vs.V2 + v.V1 * v.V1 + v.V1 * kl.K1) - (3.0 * a + omega) * S1);
  p.eps_T_per_U = 2.0 * p.Delta_T_U / p.Delta;
  p.eps_n_per_U = 2.0 * p.Delta_n_U / p.Delta;
  p.eps_T_per_gT = p.Delta_T_gT / p.Delta;
  p.eps_n_per_gT = p.Delta_n_gT / p.Delta;
  return p;
}

FieldCoefficients JumpSolution::coefficients(double U, double g_T) const {
  FieldCoefficients f;
  f.state.U = U;
  f.state.g_T = g_T;
  f.state.eps_n = eps_n_per_U * U + eps_n_per_gT * g_T;
  f.state.eps_T = eps_T_per_U * U + eps_T_per_gT * g_T;
  f.C0 = C0_per_U * U + C0_per_gT * g_T;
  f.C1 = C1_per_gT * g_T;
  return f;
}

JumpSolver::JumpSolver(double a, const JumpOptions& options) : model_(a) {
  if (!(a > 0.0) || !std::isfinite(a)) throw DomainError("JumpSolver: needs finite a > 0");
  Dispersion d(model_, build_grid(model_.alpha(), options.panels, options.nodes_per_panel, options.grading),
               options.variant);
  ThetaTable table = ThetaTable::build(d, options.theta);
  fact_ = std::make_unique<Factorization>(d, std::move(table));

  const auto nodes = fact_->nodes();
  const auto& k = model_.coeffs();
  w_.resize(nodes.size());
  poly_.resize(nodes.size());
  for (std::size_t j = 0; j < nodes.size(); ++j) {
    const double eta = nodes[j];
    PointData p{eta, {}, fact_->minors_nodes()[j], fact_->theta_nodes()[j], fact_->v_pv_nodes()[j]};
    const double s = 1.0 - a * eta;
    w_[j] = -eta * eta * eta * model_.weight(eta) * std::exp(-p.v_pv) * std::polar(1.0, p.theta - kTwoPi) /
            (s * s * fact_->lambda_plus_nodes()[j]);
    const auto& m = p.minors;
    const double R = m[2] - k.beta * m[0];
    poly_[j] = {k.r0 * m[0] * a * a - k.r1 * m[1] * a + k.r2 * R * (1.0 - k.beta * a * a),
                -2.0 * a * k.r0 * m[0] + k.r1 * m[1] + 2.0 * a * k.beta * k.r2 * R, k.r0 * m[0] - k.beta * k.r2 * R};
  }
}

JumpSolver::PointData JumpSolver::point_data(double mu) const {
  const Dispersion& d = fact_->dispersion();
  d.check_cut_point(mu);
  PointData p;
  p.mu = mu;
  const cplx lp = d.lambda_boundary(mu, Side::plus);
  p.theta = fact_->theta_table().branch(mu, lp);
  p.v_pv = fact_->V_pv(mu, p.theta);
  p.minors = d.minors(mu);
  const double s = 1.0 - model_.slope() * mu;
  p.w = -mu * mu * mu * model_.weight(mu) * std::exp(-p.v_pv) * std::polar(1.0, p.theta - kTwoPi) / (s * s * lp);
  return p;
}

cplx JumpSolver::w_at(double eta) const { return point_data(eta).w; }

cplx JumpSolver::w_quotient(double eta) const {
  const double s = 1.0 - model_.slope() * eta;
  return fact_->x_reciprocal_jump(eta) /
         (cplx(0.0, kTwoPi) * s * s * fact_->dispersion().q_tilde(eta, eta));
}

KLMoments JumpSolver::kl_moments() const {
  const auto nodes = fact_->nodes();
  const auto wq = fact_->weights();
  cplx K1{}, K0{}, L1{}, L0{};
  for (std::size_t j = 0; j < nodes.size(); ++j) {
    const cplx ww = wq[j] * w_[j];
    const auto& p = poly_[j];
    const double eta = nodes[j];
    K1 -= ww * p[0];
    K0 -= ww * (p[0] * eta + p[1]);
    L1 -= ww * eta * p[0];
    L0 -= ww * eta * (p[0] * eta + p[1]);
  }
  KLMoments m{K1.real(), K0.real(), L1.real(), L0.real(), 0.0};
  m.max_imag = std::max({std::abs(K1.imag()), std::abs(K0.imag()), std::abs(L1.imag()), std::abs(L0.imag())});
  return m;
}

std::array<cplx, 2> JumpSolver::kl_direct(cplx z) const {
  const auto nodes = fact_->nodes();
  const auto wq = fact_->weights();
  const Dispersion& d = fact_->dispersion();
  const cplx s = 1.0 - model_.slope() * z;
  const cplx c = z / s;
  cplx K{}, L{};
  for (std::size_t j = 0; j < nodes.size(); ++j) {
    const cplx term = wq[j] * w_[j] * s * s * d.q_tilde_from(fact_->minors_nodes()[j], c) / (nodes[j] - z);
    K += term;
    L += term * nodes[j];
  }
  return {K, L};
}

KLFit JumpSolver::kl_direct_fit(double scale) const {
  KLFit fit;
  constexpr int n_points = 5;
  constexpr int n_terms = 4;  // z, 1, 1/z, 1/z^2
  Eigen::MatrixXd A(n_points, n_terms);
  Eigen::MatrixXd b(n_points, 2);
  for (int i = 0; i < n_points; ++i) {
    const double z = -scale * std::pow(10.0, 2.0 + 0.5 * i);
    fit.z.push_back(z);
    const auto kl = kl_direct(z);
    A(i, 0) = z;
    A(i, 1) = 1.0;
    A(i, 2) = 1.0 / z;
    A(i, 3) = 1.0 / (z * z);
    b(i, 0) = kl[0].real();
    b(i, 1) = kl[1].real();
  }
  const Eigen::VectorXd colscale = A.colwise().norm().cwiseInverse();
  const Eigen::MatrixXd As = A * colscale.asDiagonal();
  const Eigen::MatrixXd sol = colscale.asDiagonal() * As.colPivHouseholderQr().solve(b);
  fit.moments = {sol(0, 0), sol(1, 0), sol(0, 1), sol(1, 1), 0.0};
  return fit;
}

JumpSolution JumpSolver::solve() const {
  JumpSolution sol;
  const double a = model_.slope();
  const double om = model_.omega();
  sol.a = a;
  sol.omega = om;
  sol.V = fact_->v_moments();
  sol.Vs = v_star(sol.V);
  sol.kl = kl_moments();
  sol.theta_winding = fact_->theta_table().theta_end();
  const auto& V = sol.V;
  const auto& Vs = sol.Vs;
  const auto& kl = sol.kl;

  const double S1 = kl.K1 + V.V1;
  const double S0 = kl.K0 - Vs.V2;
  Eigen::Matrix2d M;
  M << a * a * S1 - 2.0 * a, (1.0 - 0.5 * a * a) * S1 + a, a * a * S0 + 1.0, (1.0 - 0.5 * a * a) * S0 - 0.5;
  sol.determinant = M.determinant();
  const double scale = M.cwiseAbs().maxCoeff();
  if (!(std::abs(sol.determinant) > 1e-12 * scale * scale)) {
    std::ostringstream os;
    os.precision(6);
    os << "solve_jumps: degenerate 2x2 system (determinant " << sol.determinant << ", a = " << a << ")";
    throw NumericalError(os.str());
  }
  const auto lu = M.partialPivLu();

  auto respond = [&](double U, double g, double& en, double& eT, double& C0, double& C1) {
    C1 = g * (1.5 * a * a - 1.0);
    const double c0f = -2.0 * a * U - a * (om + 3.0) * g + C1 * V.V1;
    const double p1f = 2.0 * U + (om + 1.5) * g;
    const Eigen::Vector2d rhs(-(c0f * S1 + p1f + C1 * (kl.L1 - Vs.V2)), -(c0f * S0 + C1 * (kl.L0 - Vs.V3)));
    const Eigen::Vector2d x = lu.solve(rhs);
    en = x(0);
    eT = x(1);
    C0 = a * a * en + (1.0 - 0.5 * a * a) * eT + c0f;
  };
  double c1u = 0.0;
  respond(1.0, 0.0, sol.eps_n_per_U, sol.eps_T_per_U, sol.C0_per_U, c1u);
  respond(0.0, 1.0, sol.eps_n_per_gT, sol.eps_T_per_gT, sol.C0_per_gT, sol.C1_per_gT);

  sol.printed = printed_determinants(a, om, V, Vs, kl);

  const FieldCoefficients f = sol.coefficients(0.0, 1.0);
  const double m2 = std::abs(m_from_boundary(-1e2, f)) / 1e2;
  const double m3 = std::abs(m_from_boundary(-1e3, f)) / 1e3;
  sol.laurent_growth = m3 / m2;
  return sol;
}

cplx JumpSolver::m_from_boundary(cplx z, const FieldCoefficients& f) const {
  const double a = model_.slope();
  const auto& st = f.state;
  const cplx s = 1.0 - a * z;
  const cplx c = z / s;
  const cplx h = st.eps_n + st.eps_T + (2.0 * st.U + model_.omega() * st.g_T) * c +
                 (c * c - 1.5) * (st.eps_T - st.g_T * z);
  return -s * s * h + (f.C0 + f.C1 * z) * z * z * std::exp(-fact_->V(z));
}

cplx JumpSolver::m_from_integral(cplx z, const FieldCoefficients& f) const {
  const auto kl = kl_direct(z);
  return f.C0 * kl[0] + f.C1 * kl[1];
}

double JumpSolver::spectral_coefficient(double mu, const FieldCoefficients& f) const {
  const PointData p = point_data(mu);
  const double s = 1.0 - model_.slope() * mu;
  return -(f.C0 + f.C1 * mu) * mu * mu * std::exp(-p.v_pv) * std::cos(p.theta) / (s * s);
}

cplx JumpSolver::spectral_coefficient_complex(double mu, const FieldCoefficients& f) const {
  const Dispersion& d = fact_->dispersion();
  const double s = 1.0 - model_.slope() * mu;
  const cplx xm = fact_->X_boundary(mu, Side::minus);
  const cplx lp = d.lambda_boundary(mu, Side::plus);
  return -(f.C0 + f.C1 * mu) * d.lambda_pv(mu) / (s * s * xm * lp);
}

SpectralDensity JumpSolver::spectral_density(const FieldCoefficients& f) const {
  const auto nodes = fact_->nodes();
  const Dispersion& d = fact_->dispersion();
  std::vector<double> eta(nodes.begin(), nodes.end());
  std::vector<double> vals(nodes.size());
  double max_imag = 0.0;
  for (std::size_t j = 0; j < nodes.size(); ++j) {
    const double mu = nodes[j];
    const double s = 1.0 - model_.slope() * mu;
    const double th = fact_->theta_nodes()[j];
    const double e = std::exp(-fact_->v_pv_nodes()[j]);
    vals[j] = -(f.C0 + f.C1 * mu) * mu * mu * e * std::cos(th) / (s * s);
    const cplx xm = std::polar(e, th - kTwoPi) * mu * mu;  // 1 / X^-
    const cplx ac = -(f.C0 + f.C1 * mu) * d.lambda_pv(mu) * xm / (s * s * fact_->lambda_plus_nodes()[j]);
    max_imag = std::max(max_imag, std::abs(ac.imag()));
  }
  return SpectralDensity(std::move(eta), std::move(vals), max_imag);
}

double JumpSolver::continuum_integral(double x, double mu, const FieldCoefficients& f,
                                      const std::vector<double>& q_nodes, const PointData* pole) const {
  const auto nodes = fact_->nodes();
  const auto wq = fact_->weights();
  std::vector<double> g(nodes.size());
  for (std::size_t j = 0; j < nodes.size(); ++j) {
    const double eta = nodes[j];
    g[j] = std::exp(-x / eta) * (f.C0 + f.C1 * eta) * w_[j].real() * q_nodes[j];
  }
  if (pole == nullptr) {
    double s = 0.0;
    for (std::size_t j = 0; j < nodes.size(); ++j) s += wq[j] * g[j] / (nodes[j] - mu);
    return s;
  }
  const double c_mu = model_.c_of_mu(mu);
  const Dispersion& d = fact_->dispersion();
  auto value = [&](const PointData& p) {
    return std::exp(-x / p.mu) * (f.C0 + f.C1 * p.mu) * p.w.real() * d.q_tilde_from(p.minors, c_mu);
  };
  auto f_at = [&](double eta) {
    if (eta == mu) return value(*pole);
    return value(point_data(eta));
  };
  return principal_value<double>(std::span<const double>(g), f_at, mu, fact_->half_grid());
}

double JumpSolver::reconstruct_h(double x, double mu, const FieldCoefficients& f) const {
  const double out[] = {x};
  return reconstruct_field(out, std::span<const double>(&mu, 1), f)[0][0];
}

std::vector<std::vector<double>> JumpSolver::reconstruct_field(std::span<const double> xs,
                                                               std::span<const double> mus,
                                                               const FieldCoefficients& f) const {
  for (double x : xs) {
    if (!(x >= 0.0)) throw DomainError("reconstruct: x must be non-negative");
  }
  std::vector<std::vector<double>> h(xs.size(), std::vector<double>(mus.size()));
  const auto nodes = fact_->nodes();
  const Dispersion& d = fact_->dispersion();
  const double a = model_.slope();
  std::vector<double> q(nodes.size());
  for (std::size_t j = 0; j < mus.size(); ++j) {
    const double mu = mus[j];
    const double c = model_.c_of_mu(mu);
    for (std::size_t k = 0; k < nodes.size(); ++k) q[k] = d.q_tilde_from(fact_->minors_nodes()[k], c);
    const bool on_spectrum = mu > 0.0;
    std::optional<PointData> pole;
    double A = 0.0;
    if (on_spectrum) {
      pole = point_data(mu);
      const double s = 1.0 - a * mu;
      A = -(f.C0 + f.C1 * mu) * mu * mu * std::exp(-pole->v_pv) * std::cos(pole->theta) / (s * s);
    }
    for (std::size_t i = 0; i < xs.size(); ++i) {
      const double x = xs[i];
      double v = model_.h_asymptotic(x, mu, f.state);
      if (on_spectrum) v += std::exp(-x / mu) * A;
      v += continuum_integral(x, mu, f, q, pole ? &*pole : nullptr);
      h[i][j] = v;
    }
  }
  return h;
}

double JumpSolver::boundary_residual(const FieldCoefficients& f, int n_probe, std::optional<double> mu_max) const {
  if (n_probe < 1) throw DomainError("boundary_residual: n_probe must be positive");
  const double top = mu_max.value_or(model_.mu_of_c(6.0));
  if (!(top > 0.0 && top < alpha())) throw DomainError("boundary_residual: mu_max must lie in (0, alpha)");
  std::vector<double> mus(n_probe);
  for (int j = 0; j < n_probe; ++j) mus[j] = top * (j + 1) / (n_probe + 1);
  const double x0[] = {0.0};
  const auto h = reconstruct_field(x0, mus, f);
  double sup = 0.0;
  for (double v : h[0]) sup = std::max(sup, std::abs(v));
  const auto& s = f.state;
  const double scale = std::max({std::abs(s.eps_T), std::abs(s.eps_n), std::abs(2.0 * s.U), std::abs(s.g_T)});
  return scale > 0.0 ? sup / scale : sup;
}

SpectralDensity::SpectralDensity(std::vector<double> eta, std::vector<double> values, double max_imag)
    : eta_(std::move(eta)), values_(std::move(values)), max_imag_(max_imag) {
  std::vector<double> x = eta_;
  std::vector<double> y = values_;
  spline_ = std::make_shared<const boost::math::interpolators::makima<std::vector<double>>>(std::move(x),
                                                                                              std::move(y));
}

double SpectralDensity::operator()(double eta) const {
  if (eta <= eta_.front() || eta >= eta_.back()) {
    throw DomainError("SpectralDensity: eta outside the sampled range");
  }
  return (*spline_)(eta);
}

}  // namespace kinjump
