#include "kinjump/dispersion.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "kinjump/errors.hpp"

namespace kinjump {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kGuard = 1e-9;

}  // namespace

std::string_view to_string(MatrixVariant v) {
  switch (v) {
    case MatrixVariant::corrected: return "corrected";
    case MatrixVariant::printed_lambda11: return "printed_lambda11";
    case MatrixVariant::printed_lambda22: return "printed_lambda22";
    case MatrixVariant::printed: return "printed";
  }
  return "unknown";
}

MatrixVariant matrix_variant_from_string(std::string_view s) {
  for (auto v : {MatrixVariant::corrected, MatrixVariant::printed_lambda11, MatrixVariant::printed_lambda22,
                 MatrixVariant::printed}) {
    if (to_string(v) == s) return v;
  }
  throw DomainError("unknown matrix variant '" + std::string(s) + "'");
}

Dispersion::Dispersion(const GasModel& model, CutGrid grid, MatrixVariant variant)
    : model_(model), grid_(std::move(grid)), variant_(variant) {
  if (!(model_.slope() > 0.0)) throw DomainError("Dispersion: needs a > 0 (finite cut)");
  if (std::abs(grid_.upper() - model_.alpha()) > 1e-12 * model_.alpha() ||
      std::abs(grid_.lower() + model_.alpha()) > 1e-12 * model_.alpha()) {
    throw DomainError("Dispersion: grid does not span the cut (-alpha, alpha)");
  }
  const auto nodes = grid_.nodes();
  for (auto& v : cn_rho_) v.resize(nodes.size());
  for (std::size_t k = 0; k < nodes.size(); ++k) {
    const double r = model_.weight(nodes[k]);
    const double c = model_.c_of_mu(nodes[k]);
    double p = r;
    for (int n = 0; n < 5; ++n) {
      cn_rho_[n][k] = p;
      p *= c;
    }
  }
}

void Dispersion::check_cut_point(double eta) const {
  const double al = alpha();
  if (!(eta > kGuard * al && eta < al * (1.0 - kGuard))) {
    std::ostringstream os;
    os.precision(17);
    os << "cut point " << eta << " outside the admissible band (" << kGuard * al << ", " << al * (1.0 - kGuard)
       << ")";
    throw DomainError(os.str());
  }
}

TMoments Dispersion::t_moments(cplx z) const {
  if (z.imag() == 0.0 && std::abs(z.real()) < alpha()) {
    throw DomainError("t_moments: z lies on the cut; use t_moments_pv or t_boundary");
  }
  TMoments t{};
  if (z == cplx(0.0)) return t;
  const auto nodes = grid_.nodes();
  const auto weights = grid_.weights();
  for (std::size_t k = 0; k < nodes.size(); ++k) {
    const cplx q = weights[k] / (nodes[k] - z);
    for (int n = 0; n < 5; ++n) t[n] += cn_rho_[n][k] * q;
  }
  for (auto& v : t) v *= z;
  return t;
}

std::array<double, 5> Dispersion::t_moments_pv(double eta) const {
  std::array<double, 5> t{};
  if (eta == 0.0) return t;
  for (int n = 0; n < 5; ++n) {
    auto f = [this, n](double mu) {
      const double r = model_.weight(mu);
      return r == 0.0 ? 0.0 : std::pow(model_.c_of_mu(mu), n) * r;
    };
    t[n] = eta * principal_value<double>(std::span<const double>(cn_rho_[n]), f, eta, grid_);
  }
  return t;
}

TMoments Dispersion::t_boundary(double eta, Side side) const {
  check_cut_point(std::abs(eta));
  const auto pv = t_moments_pv(eta);
  const double r = model_.weight(eta);
  const double c = model_.c_of_mu(eta);
  const double s = static_cast<double>(static_cast<int>(side));
  TMoments t{};
  double p = std::numbers::pi * eta * r;
  for (int n = 0; n < 5; ++n) {
    t[n] = cplx(pv[n], s * p);
    p *= c;
  }
  return t;
}

Matrix3c Dispersion::matrix(const TMoments& t) const {
  const auto& k = model_.coeffs();
  const double b = k.beta;
  const bool p11 = variant_ == MatrixVariant::printed_lambda11 || variant_ == MatrixVariant::printed;
  const bool p22 = variant_ == MatrixVariant::printed_lambda22 || variant_ == MatrixVariant::printed;
  Matrix3c m;
  for (int row = 0; row < 3; ++row) {
    const double r0 = (row == 0 && p11) ? k.r2 : k.r0;
    const int n1 = (row == 1 && p22) ? 3 : row + 1;
    m(row, 0) = (row == 0 ? 1.0 : 0.0) + (r0 + b * b * k.r2) * t[row] - b * k.r2 * t[row + 2];
    m(row, 1) = (row == 1 ? 1.0 : 0.0) + k.r1 * t[n1];
    m(row, 2) = (row == 2 ? 1.0 : 0.0) + k.r2 * (t[row + 2] - b * t[row]);
  }
  return m;
}

cplx Dispersion::det_expanded(const Matrix3c& m) {
  return m(0, 0) * m(1, 1) * m(2, 2) + m(0, 1) * m(1, 2) * m(2, 0) + m(0, 2) * m(1, 0) * m(2, 1) -
         m(0, 2) * m(1, 1) * m(2, 0) - m(0, 1) * m(1, 0) * m(2, 2) - m(0, 0) * m(1, 2) * m(2, 1);
}

cplx Dispersion::det_generic(const Matrix3c& m) { return m.partialPivLu().determinant(); }

cplx Dispersion::lambda(cplx z) const { return det_generic(matrix(t_moments(z))); }

Matrix3c Dispersion::matrix_pv(double eta) const {
  const auto pv = t_moments_pv(eta);
  TMoments t;
  for (int n = 0; n < 5; ++n) t[n] = pv[n];
  return matrix(t);
}

double Dispersion::lambda_pv(double eta) const { return det_generic(matrix_pv(eta)).real(); }

cplx Dispersion::lambda_boundary(double eta, Side side) const {
  return det_generic(matrix(t_boundary(eta, side)));
}

std::array<double, 3> Dispersion::minors(double eta) const {
  const Eigen::Matrix3d m = matrix_pv(eta).real();
  const double c = model_.c_of_mu(eta);
  const double v[3] = {1.0, c, c * c};
  double adj[3][3];
  adj[0][0] = m(1, 1) * m(2, 2) - m(1, 2) * m(2, 1);
  adj[0][1] = -(m(0, 1) * m(2, 2) - m(0, 2) * m(2, 1));
  adj[0][2] = m(0, 1) * m(1, 2) - m(0, 2) * m(1, 1);
  adj[1][0] = -(m(1, 0) * m(2, 2) - m(1, 2) * m(2, 0));
  adj[1][1] = m(0, 0) * m(2, 2) - m(0, 2) * m(2, 0);
  adj[1][2] = -(m(0, 0) * m(1, 2) - m(0, 2) * m(1, 0));
  adj[2][0] = m(1, 0) * m(2, 1) - m(1, 1) * m(2, 0);
  adj[2][1] = -(m(0, 0) * m(2, 1) - m(0, 1) * m(2, 0));
  adj[2][2] = m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0);
  std::array<double, 3> out{};
  for (int i = 0; i < 3; ++i) out[i] = adj[i][0] * v[0] + adj[i][1] * v[1] + adj[i][2] * v[2];
  return out;
}

std::array<double, 3> Dispersion::minors_cramer(double eta) const {
  const Eigen::Matrix3d m = matrix_pv(eta).real();
  const auto lu = m.partialPivLu();
  const double det = lu.determinant();
  if (std::abs(det) < 1e-12) {
    std::ostringstream os;
    os.precision(17);
    os << "minors_cramer: lambda(" << eta << ") = " << det << " is numerically zero";
    throw NumericalError(os.str());
  }
  const double c = model_.c_of_mu(eta);
  const Eigen::Vector3d n = lu.solve(Eigen::Vector3d(1.0, c, c * c));
  return {det * n(0), det * n(1), det * n(2)};
}

double Dispersion::q_tilde(double eta, double mu) const {
  return q_tilde_from(minors(eta), model_.c_of_mu(mu));
}

cplx Dispersion::q_tilde_z(double eta, cplx z) const {
  return q_tilde_from(minors(eta), z / (1.0 - model_.slope() * z));
}

Eigenfunction Dispersion::eigenfunction(double eta, double mu) const {
  if (eta == mu) return {0.0, 1.0};
  const double reg = eta * model_.weight(eta) * q_tilde(eta, mu) / (lambda_pv(eta) * (eta - mu));
  return {reg, 1.0};
}

DispersionSample Dispersion::sample(cplx z) const {
  DispersionSample s;
  s.z = z;
  s.t = t_moments(z);
  s.lam = matrix(s.t);
  s.lam_det = det_generic(s.lam);
  const cplx c = z / (1.0 - model_.slope() * (z.real() >= 0.0 ? z : -z));
  const Eigen::Vector3cd v(1.0, c, c * c);
  const Eigen::Vector3cd n = s.lam_det * s.lam.partialPivLu().solve(v);
  s.minors = {n(0), n(1), n(2)};
  return s;
}

DispersionSample Dispersion::sample_boundary(double eta, Side side) const {
  DispersionSample s;
  s.z = eta;
  s.on_cut = true;
  s.side = side;
  s.t = t_boundary(eta, side);
  s.lam = matrix(s.t);
  s.lam_det = det_generic(s.lam);
  const auto m = minors(eta);
  s.minors = {m[0], m[1], m[2]};
  return s;
}

ThetaTable ThetaTable::build(const Dispersion& d, const ThetaOptions& options) {
  if (options.n_samples < 8) throw DomainError("ThetaTable: need at least 8 samples");
  const double al = d.alpha();
  const GasModel& model = d.model();
  const double lo = kGuard * al * 10.0;
  const double hi = al * (1.0 - kGuard * 10.0);

  // Half of the seeds uniform in the speed variable (where lambda^+ turns),
  // half uniform in mu.
  std::vector<double> seeds;
  const int half = options.n_samples / 2;
  const double c_max = 8.0;
  for (int j = 1; j <= half; ++j) seeds.push_back(model.mu_of_c(c_max * j / half));
  for (int j = 1; j < options.n_samples - half; ++j) seeds.push_back(al * j / (options.n_samples - half));
  seeds.push_back(lo);
  seeds.push_back(hi);
  std::sort(seeds.begin(), seeds.end());
  seeds.erase(std::remove_if(seeds.begin(), seeds.end(), [&](double e) { return e < lo || e > hi; }),
              seeds.end());
  seeds.erase(std::unique(seeds.begin(), seeds.end(), [](double x, double y) { return std::abs(x - y) < 1e-15; }),
              seeds.end());

  ThetaTable tab;
  tab.alpha_ = al;
  tab.eta_.push_back(0.0);
  tab.theta_.push_back(0.0);

  auto unwrap = [](double prev, double ang) { return ang + kTwoPi * std::round((prev - ang) / kTwoPi); };

  for (double target : seeds) {
    // Walk from the last accepted point to `target`, bisecting while the
    // phase step is too large.
    std::vector<double> pending{target};
    while (!pending.empty()) {
      const double e = pending.back();
      const double e0 = tab.eta_.back();
      const double th = unwrap(tab.theta_.back(), std::arg(d.lambda_boundary(e, Side::plus)));
      if (std::abs(th - tab.theta_.back()) < options.max_step) {
        tab.eta_.push_back(e);
        tab.theta_.push_back(th);
        pending.pop_back();
        continue;
      }
      if (pending.size() > static_cast<std::size_t>(options.max_bisections) || e - e0 < 1e-14 * al) {
        std::ostringstream os;
        os.precision(10);
        os << "ThetaTable: cannot resolve the phase of lambda^+ between eta = " << e0 << " and " << e
           << " (a = " << model.slope() << ")";
        throw ConvergenceError(os.str());
      }
      pending.push_back(0.5 * (e0 + e));
      ++tab.refinements_;
    }
  }
  tab.theta_end_ = tab.theta_.back();
  if (options.check_winding && std::abs(tab.theta_end_ - kTwoPi) > options.winding_tolerance) {
    std::ostringstream os;
    os.precision(10);
    os << "ThetaTable: arg lambda^+ winds to " << tab.theta_end_ << " at the end of the cut, expected 2 pi (a = "
       << model.slope() << ")";
    throw NumericalError(os.str());
  }
  std::vector<double> x = tab.eta_;
  std::vector<double> y = tab.theta_;
  tab.spline_ =
      std::make_shared<const boost::math::barycentric_rational<double>>(std::move(x), std::move(y), 3);
  return tab;
}

double ThetaTable::interpolate(double eta) const {
  if (!(eta >= 0.0 && eta <= alpha_)) throw DomainError("ThetaTable::interpolate: eta outside [0, alpha]");
  if (eta >= eta_.back()) return theta_.back();
  return (*spline_)(eta);
}

double ThetaTable::branch(double eta, cplx lambda_plus) const {
  const double ang = std::arg(lambda_plus);
  return ang + kTwoPi * std::round((interpolate(eta) - ang) / kTwoPi);
}

double ThetaTable::exact(const Dispersion& d, double eta) const {
  return branch(eta, d.lambda_boundary(eta, Side::plus));
}

}  // namespace kinjump
