#include "kinjump/factorization.hpp"

#include <cmath>
#include <numbers>

#include "kinjump/errors.hpp"

namespace kinjump {

namespace {
constexpr double kPi = std::numbers::pi;
constexpr double kTwoPi = 2.0 * std::numbers::pi;
}  // namespace

VMoments v_star(const VMoments& v) {
  VMoments s;
  s.V1 = -v.V1;
  s.V2 = -v.V2 + 0.5 * v.V1 * v.V1;
  s.V3 = -v.V3 + v.V1 * v.V2 - v.V1 * v.V1 * v.V1 / 6.0;
  return s;
}

Factorization::Factorization(const Dispersion& d, ThetaTable table)
    : d_(d), table_(std::move(table)), half_(d.grid().positive_half()) {
  const auto nodes = half_.nodes();
  const std::size_t n = nodes.size();
  theta_.resize(n);
  density_.resize(n);
  lam_plus_.resize(n);
  minors_.resize(n);
  v_pv_.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    lam_plus_[k] = d_.lambda_boundary(nodes[k], Side::plus);
    theta_[k] = table_.branch(nodes[k], lam_plus_[k]);
    density_[k] = (theta_[k] - kTwoPi) / kPi;
    minors_[k] = d_.minors(nodes[k]);
  }
  for (std::size_t k = 0; k < n; ++k) v_pv_[k] = V_pv(nodes[k], theta_[k]);
}

double Factorization::theta(double mu) const { return table_.exact(d_, mu); }

cplx Factorization::V(cplx z) const {
  if (z.imag() == 0.0 && z.real() >= 0.0 && z.real() <= alpha()) {
    throw DomainError("Factorization::V: z on [0, alpha]; use V_pv or V_boundary");
  }
  const auto nodes = half_.nodes();
  const auto w = half_.weights();
  cplx s{};
  for (std::size_t k = 0; k < nodes.size(); ++k) s += w[k] * density_[k] / (nodes[k] - z);
  return s;
}

double Factorization::V_pv(double mu, double theta_mu) const {
  auto f = [&](double x) {
    if (x == mu) return (theta_mu - kTwoPi) / kPi;
    return (theta(x) - kTwoPi) / kPi;
  };
  return principal_value<double>(std::span<const double>(density_), f, mu, half_);
}

double Factorization::V_pv(double mu) const {
  d_.check_cut_point(mu);
  return V_pv(mu, theta(mu));
}

cplx Factorization::V_boundary(double mu, Side side) const {
  d_.check_cut_point(mu);
  const double th = theta(mu);
  const double s = static_cast<double>(static_cast<int>(side));
  return {V_pv(mu, th), s * (th - kTwoPi)};
}

cplx Factorization::X(cplx z) const {
  if (z == cplx(0.0)) throw DomainError("Factorization::X: z = 0");
  return std::exp(V(z)) / (z * z);
}

cplx Factorization::X_boundary(double mu, Side side) const { return std::exp(V_boundary(mu, side)) / (mu * mu); }

VMoments Factorization::v_moments() const {
  const auto nodes = half_.nodes();
  const auto w = half_.weights();
  VMoments v;
  for (std::size_t k = 0; k < nodes.size(); ++k) {
    const double g = -w[k] * (theta_[k] - kTwoPi) / kPi;
    v.V1 += g;
    v.V2 += g * nodes[k];
    v.V3 += g * nodes[k] * nodes[k];
  }
  return v;
}

cplx Factorization::x_reciprocal_jump(double mu) const {
  d_.check_cut_point(mu);
  const double th = theta(mu);
  const double vpv = V_pv(mu, th);
  return {0.0, -2.0 * mu * mu * std::exp(-vpv) * std::sin(th - kTwoPi)};
}

cplx Factorization::x_reciprocal_jump_direct(double mu) const {
  return 1.0 / X_boundary(mu, Side::plus) - 1.0 / X_boundary(mu, Side::minus);
}

}  // namespace kinjump
