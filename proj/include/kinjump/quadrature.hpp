#pragma once

// Composite Gauss-Legendre rules on the cut and the three integral flavours
// used throughout the solver: smooth integrals, Cauchy principal values with
// a pole inside the cut, and Cauchy integrals with a complex pole.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <span>
#include <string>
#include <type_traits>
#include <vector>

#include "kinjump/errors.hpp"

namespace kinjump {

/// Panel placement for build_grid.  Core panels are uniform in the speed
/// variable C = mu / (1 - |mu| / alpha); outside the core the panels shrink
/// geometrically toward the endpoint so no node ever sits on it.
struct GradingOptions {
  double core_speed = 9.0;
  int endpoint_levels = 8;
  int origin_levels = 4;
  double ratio = 0.5;
};

class CutGrid {
 public:
  /// Gauss rule with `nodes_per_panel` points on each [bounds[i], bounds[i+1]].
  static CutGrid from_panels(std::vector<double> bounds, int nodes_per_panel, int level = 0,
                             double tolerance = 1e-10);

  double lower() const { return bounds_.front(); }
  double upper() const { return bounds_.back(); }
  std::size_t size() const { return nodes_.size(); }
  std::span<const double> nodes() const { return nodes_; }
  std::span<const double> weights() const { return weights_; }
  std::span<const double> panel_bounds() const { return bounds_; }
  int nodes_per_panel() const { return nodes_per_panel_; }
  int level() const { return level_; }
  double tolerance() const { return tolerance_; }

  /// Same rule with every panel split in half (used for error estimates).
  CutGrid refined() const;

  /// The sub-rule on (0, upper()); requires 0 to be a panel boundary.
  CutGrid positive_half() const;

  /// Node set closed under negation (to rounding).
  bool symmetric() const;

 private:
  std::vector<double> bounds_;
  std::vector<double> nodes_;
  std::vector<double> weights_;
  int nodes_per_panel_ = 0;
  int level_ = 0;
  double tolerance_ = 1e-10;
};

/// Symmetric composite rule on (-alpha, alpha).  `n_panels` counts panels on
/// both halves together.
CutGrid build_grid(double alpha, int n_panels, int nodes_per_panel,
                   const GradingOptions& options = {});

/// Gauss-Legendre nodes and weights on [-1, 1].
void gauss_legendre(int n, std::vector<double>& nodes, std::vector<double>& weights);

template <class T>
struct Estimate {
  T value;
  double error;
};

namespace detail {

template <class T>
bool finite_value(const T& v) {
  if constexpr (std::is_floating_point_v<T>) {
    return std::isfinite(v);
  } else {
    return std::isfinite(v.real()) && std::isfinite(v.imag());
  }
}

[[noreturn]] void throw_non_finite(const char* what, double node);
[[noreturn]] void throw_pole_outside(double pole, double lower, double upper);

/// Step for the derivative estimate used when the pole falls on a node.
double derivative_step(double pole, double lower, double upper);

}  // namespace detail

template <class F>
auto integrate(F&& f, const CutGrid& grid) {
  using T = std::decay_t<decltype(f(0.0))>;
  T sum{};
  const auto nodes = grid.nodes();
  const auto weights = grid.weights();
  for (std::size_t k = 0; k < nodes.size(); ++k) {
    const T v = f(nodes[k]);
    if (!detail::finite_value(v)) detail::throw_non_finite("integrand", nodes[k]);
    sum += weights[k] * v;
  }
  return sum;
}

/// Value on `grid` plus |difference| against the panel-halved rule.
template <class F>
auto integrate_with_error(F&& f, const CutGrid& grid) {
  using T = std::decay_t<decltype(f(0.0))>;
  const T coarse = integrate(f, grid);
  const T fine = integrate(f, grid.refined());
  return Estimate<T>{fine, std::abs(fine - coarse)};
}

/// PV of the integral of f(mu) / (mu - pole) over the grid's interval, given
/// the integrand numerator at the nodes and a callable for off-node values.
///
/// Subtraction form: the integral of (f(mu) - f(pole)) / (mu - pole) plus
/// f(pole) * log((upper - pole) / (pole - lower)).  A node within 1e-7 of the
/// scale of the pole uses a central-difference derivative instead of the
/// difference quotient.
template <class T, class F>
T principal_value(std::span<const T> node_values, F&& f_at, double pole, const CutGrid& grid) {
  const double lo = grid.lower();
  const double hi = grid.upper();
  if (!(pole > lo && pole < hi)) detail::throw_pole_outside(pole, lo, hi);
  const auto nodes = grid.nodes();
  const auto weights = grid.weights();
  const T f0 = f_at(pole);
  if (!detail::finite_value(f0)) detail::throw_non_finite("principal-value numerator", pole);
  const double near = 1e-7 * std::max(std::abs(lo), std::abs(hi));
  T sum{};
  for (std::size_t k = 0; k < nodes.size(); ++k) {
    const double d = nodes[k] - pole;
    T q;
    if (std::abs(d) < near) {
      const double h = detail::derivative_step(pole, lo, hi);
      q = (f_at(pole + h) - f_at(pole - h)) / (2.0 * h);
    } else {
      q = (node_values[k] - f0) / d;
    }
    sum += weights[k] * q;
  }
  return sum + f0 * std::log((hi - pole) / (pole - lo));
}

template <class F>
auto principal_value(F&& f, double pole, const CutGrid& grid) {
  using T = std::decay_t<decltype(f(0.0))>;
  std::vector<T> values(grid.size());
  const auto nodes = grid.nodes();
  for (std::size_t k = 0; k < nodes.size(); ++k) {
    values[k] = f(nodes[k]);
    if (!detail::finite_value(values[k])) detail::throw_non_finite("integrand", nodes[k]);
  }
  return principal_value<T>(std::span<const T>(values), f, pole, grid);
}

/// Plain quadrature of f(mu) / (mu - z) for z off the cut.  Accuracy degrades
/// as z approaches the cut; use cauchy_integral_with_error to see by how much.
template <class F>
std::complex<double> cauchy_integral(F&& f, std::complex<double> z, const CutGrid& grid) {
  if (z.imag() == 0.0 && z.real() >= grid.lower() && z.real() <= grid.upper()) {
    throw DomainError("cauchy_integral: z = " + std::to_string(z.real()) +
                      " lies on the cut; use principal_value and the Plemelj formulas");
  }
  std::complex<double> sum{};
  const auto nodes = grid.nodes();
  const auto weights = grid.weights();
  for (std::size_t k = 0; k < nodes.size(); ++k) {
    const auto v = f(nodes[k]);
    if (!detail::finite_value(v)) detail::throw_non_finite("integrand", nodes[k]);
    sum += weights[k] * std::complex<double>(v) / (nodes[k] - z);
  }
  return sum;
}

template <class F>
Estimate<std::complex<double>> cauchy_integral_with_error(F&& f, std::complex<double> z,
                                                          const CutGrid& grid) {
  const auto coarse = cauchy_integral(f, z, grid);
  const auto fine = cauchy_integral(f, z, grid.refined());
  return {fine, std::abs(fine - coarse)};
}

}  // namespace kinjump
