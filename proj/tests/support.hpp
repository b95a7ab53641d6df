#pragma once

// Reference values computed independently of the library: adaptive Boost
// quadrature in the speed variable C, where every weight is a plain Gaussian.

#include <boost/math/quadrature/exp_sinh.hpp>

#include <cmath>
#include <complex>
#include <numbers>

namespace kinjump::test {

inline constexpr double kSqrtPi = 1.7724538509055160273;

/// integral over the real line of exp(-C^2) (1 + a|C|) C^n dC for even n
/// (zero for odd n).  This is the rho-weighted moment of C^n on the cut.
inline double gaussian_moment(int n, double a) {
  if (n % 2 != 0) return 0.0;
  boost::math::quadrature::exp_sinh<double> q;
  const double half = q.integrate([&](double c) { return c > 40.0 ? 0.0 : std::exp(-c * c) * (1.0 + a * c) * std::pow(c, n); });
  return 2.0 * half;
}

/// <f, g>_rho for f, g polynomial in C, by the same Gaussian quadrature.
template <class F>
double gaussian_integral(F&& f, double a) {
  boost::math::quadrature::exp_sinh<double> q;
  // exp(-C^2) underflows long before C = 40.
  const double pos = q.integrate([&](double c) { return c > 40.0 ? 0.0 : std::exp(-c * c) * (1.0 + a * c) * f(c); });
  const double neg = q.integrate([&](double c) { return c > 40.0 ? 0.0 : std::exp(-c * c) * (1.0 + a * c) * f(-c); });
  return pos + neg;
}

struct ReferenceKernel {
  double r0, r1, r2, beta;
};

/// Kernel coefficients from their defining inner products.
inline ReferenceKernel reference_kernel(double a) {
  const double m0 = gaussian_moment(0, a);
  const double m2 = gaussian_moment(2, a);
  const double m4 = gaussian_moment(4, a);
  const double beta = m2 / m0;
  return {1.0 / m0, 1.0 / m2, 1.0 / (m4 - 2.0 * beta * m2 + beta * beta * m0), beta};
}

/// omega(a) from its C-variable definition.
inline double reference_omega(double a) {
  boost::math::quadrature::exp_sinh<double> q;
  const double v = q.integrate([&](double c) {
    if (c > 40.0) return 0.0;
    const double c2 = c * c;
    return std::exp(-c2) * c2 * (c2 - 1.5) / (1.0 + a * c);
  });
  return 4.0 / kSqrtPi * v;
}

inline double rel(double x, double ref) { return std::abs(x - ref) / std::max(std::abs(ref), 1e-300); }
inline double rel(std::complex<double> x, std::complex<double> ref) {
  return std::abs(x - ref) / std::max(std::abs(ref), 1e-300);
}

}  // namespace kinjump::test
