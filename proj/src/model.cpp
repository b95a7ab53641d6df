#include "kinjump/model.hpp"

#include <gsl/gsl_errno.h>
#include <gsl/gsl_integration.h>

#include <cmath>
#include <memory>
#include <numbers>
#include <sstream>

#include "kinjump/errors.hpp"

namespace kinjump {

namespace {

constexpr double kSqrtPi = 1.7724538509055160273;

// exp(-C^2) is exactly zero in double precision beyond this.
constexpr double kUnderflowC2 = 745.0;

struct GslWorkspaceDeleter {
  void operator()(gsl_integration_workspace* w) const { gsl_integration_workspace_free(w); }
};

double omega_c_integrand(double c, void* params) {
  const double a = *static_cast<const double*>(params);
  const double c2 = c * c;
  return std::exp(-c2) * c2 * (c2 - 1.5) / (1.0 + a * c);
}

std::string describe_mu(const char* fn, double mu, double alpha) {
  std::ostringstream os;
  os.precision(17);
  os << fn << ": mu = " << mu << " outside the open cut (-" << alpha << ", " << alpha << ")";
  return os.str();
}

}  // namespace

void PhysicalScaling::validate() const {
  if (!(surface_temperature > 0.0) || !(saturated_density > 0.0) || !(molecule_mass > 0.0) ||
      !(base_frequency > 0.0)) {
    throw DomainError("PhysicalScaling: all fields must be strictly positive");
  }
}

double PhysicalScaling::beta_s() const {
  validate();
  return molecule_mass / (2.0 * kBoltzmann * surface_temperature);
}

double PhysicalScaling::thermal_velocity() const { return 1.0 / std::sqrt(beta_s()); }

double PhysicalScaling::mean_free_path() const { return thermal_velocity() / base_frequency; }

double rescale_slope(double a_physical) {
  if (!(a_physical >= 0.0) || !std::isfinite(a_physical)) {
    throw DomainError("rescale_slope: slope must be finite and non-negative");
  }
  return kSqrtPi * a_physical;
}

KernelCoeffs kernel_coeffs(double a) {
  if (!(a >= 0.0) || !std::isfinite(a)) throw DomainError("kernel_coeffs: a must be finite and non-negative");
  const double pi = std::numbers::pi;
  KernelCoeffs k;
  k.r0 = 1.0 / (a + kSqrtPi);
  k.r1 = 2.0 / (2.0 * a + kSqrtPi);
  k.r2 = 4.0 * (a + kSqrtPi) / (4.0 * a * a + 7.0 * kSqrtPi * a + 2.0 * pi);
  k.beta = (2.0 * a + kSqrtPi) / (2.0 * (a + kSqrtPi));
  return k;
}

double omega_mu_form(double a, const CutGrid& grid) {
  if (!(a > 0.0)) throw DomainError("omega_mu_form: needs a > 0 (finite cut); use omega_c_form");
  const double v = integrate(
      [a](double mu) {
        const double s = 1.0 - a * std::abs(mu);
        const double c = mu / s;
        const double c2 = c * c;
        if (c2 > kUnderflowC2) return 0.0;
        return std::exp(-c2) * c2 * (c2 - 1.5) / s;
      },
      grid);
  return 2.0 / kSqrtPi * v;
}

double omega_c_form(double a) {
  if (!(a >= 0.0) || !std::isfinite(a)) throw DomainError("omega_c_form: a must be finite and non-negative");
  std::unique_ptr<gsl_integration_workspace, GslWorkspaceDeleter> ws(gsl_integration_workspace_alloc(1000));
  gsl_function f;
  f.function = &omega_c_integrand;
  f.params = &a;
  double result = 0.0;
  double abserr = 0.0;
  gsl_error_handler_t* old = gsl_set_error_handler_off();
  const int status = gsl_integration_qagiu(&f, 0.0, 1e-14, 1e-12, 1000, ws.get(), &result, &abserr);
  gsl_set_error_handler(old);
  // GSL_EROUND only means the requested tolerance sat below the roundoff
  // floor; the error estimate decides.
  if ((status != GSL_SUCCESS && status != GSL_EROUND) || !(abserr <= 1e-11)) {
    std::ostringstream os;
    os.precision(3);
    os << "omega_c_form: adaptive quadrature did not converge (" << gsl_strerror(status)
       << ", error estimate " << abserr << ")";
    throw ConvergenceError(os.str());
  }
  // The integrand is even in C.
  return 4.0 / kSqrtPi * result;
}

GasModel::GasModel(double a)
    : a_(a),
      alpha_(a > 0.0 ? 1.0 / a : std::numeric_limits<double>::infinity()),
      coeffs_(kernel_coeffs(a)),
      omega_(omega_c_form(a)) {}

double GasModel::c_of_mu(double mu) const {
  const double s = 1.0 - a_ * std::abs(mu);
  if (!(s > 0.0)) throw DomainError(describe_mu("c_of_mu", mu, alpha_));
  return mu / s;
}

double GasModel::mu_of_c(double c) const {
  if (!std::isfinite(c)) throw DomainError("mu_of_c: speed must be finite");
  return c / (1.0 + a_ * std::abs(c));
}

double GasModel::weight(double mu) const {
  const double s = 1.0 - a_ * std::abs(mu);
  if (s == 0.0) return 0.0;
  if (s < 0.0) throw DomainError(describe_mu("weight", mu, alpha_));
  const double c = mu / s;
  const double c2 = c * c;
  if (!(c2 <= kUnderflowC2)) return 0.0;
  return std::exp(-c2) / (s * s * s);
}

double GasModel::kernel(double mu, double mu_prime) const {
  const double c = c_of_mu(mu);
  const double cp = c_of_mu(mu_prime);
  const auto& k = coeffs_;
  return k.r0 + k.r1 * c * cp + k.r2 * (c * c - k.beta) * (cp * cp - k.beta);
}

double GasModel::h_asymptotic(double x, double mu, const AsymptoticState& s) const {
  const double c = c_of_mu(mu);
  return s.eps_n + s.eps_T + (2.0 * s.U + s.g_T * omega_) * c + (c * c - 1.5) * (s.eps_T + s.g_T * (x - mu));
}

double GasModel::partial_solution(int k, double x, double mu) const {
  const double c = c_of_mu(mu);
  switch (k) {
    case 0:
      return 1.0;
    case 1:
      return c;
    case 2:
      return c * c - 0.5;
    case 3:
      return (x - mu) * (c * c - 1.5);
    default:
      throw DomainError("partial_solution: index must be 0..3");
  }
}

std::array<double, 3> invariant_moments(const std::function<double(double)>& h, const GasModel& model,
                                        const CutGrid& grid) {
  std::array<double, 3> m{0.0, 0.0, 0.0};
  const auto nodes = grid.nodes();
  const auto weights = grid.weights();
  const double beta = model.beta();
  for (std::size_t k = 0; k < nodes.size(); ++k) {
    const double r = model.weight(nodes[k]);
    if (r == 0.0) continue;
    const double hv = h(nodes[k]);
    if (!std::isfinite(hv)) detail::throw_non_finite("h", nodes[k]);
    const double c = model.c_of_mu(nodes[k]);
    const double wr = weights[k] * r * hv;
    m[0] += wr;
    m[1] += wr * c;
    m[2] += wr * (c * c - beta);
  }
  return m;
}

Projection project(const std::function<double(double)>& h, const GasModel& model, const CutGrid& grid) {
  const auto m = invariant_moments(h, model, grid);
  return {model.r0() * m[0], model.r1() * m[1], model.r2() * m[2], model.beta()};
}

double transport_residual(const std::function<double(double, double)>& h, double x, double mu,
                          const GasModel& model, const CutGrid& grid, double dx) {
  const double dhdx = (-h(x + 2 * dx, mu) + 8 * h(x + dx, mu) - 8 * h(x - dx, mu) + h(x - 2 * dx, mu)) / (12 * dx);
  const Projection kh = project([&](double m) { return h(x, m); }, model, grid);
  return mu * dhdx + h(x, mu) - kh(model.c_of_mu(mu));
}

}  // namespace kinjump
