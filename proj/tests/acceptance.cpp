// Acceptance suite: one PASS/FAIL line per criterion.  Exits nonzero when a
// gated criterion fails; criterion 12 is informational.

#include <fmt/format.h>

#include <Eigen/Dense>

#include <chrono>
#include <cmath>
#include <functional>
#include <map>
#include <memory>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "cli.hpp"
#include "kinjump/factorization.hpp"
#include "kinjump/jump.hpp"
#include "kinjump/oracle.hpp"
#include "support.hpp"

using namespace kinjump;

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  int id;
  std::string title;
  double budget_seconds;
  bool gated;
  std::function<Outcome()> body;
};

const JumpSolver& solver(double a) {
  static std::map<double, std::unique_ptr<JumpSolver>> cache;
  auto& s = cache[a];
  if (!s) s = std::make_unique<JumpSolver>(a);
  return *s;
}

Dispersion make_dispersion(double a, MatrixVariant v = MatrixVariant::corrected) {
  const GasModel m(a);
  return Dispersion(m, build_grid(m.alpha(), 72, 16), v);
}

std::string sci(double v) { return fmt::format("{:.2e}", v); }

Outcome residuals() {
  std::mt19937 rng(2024);
  double worst = 0.0;
  for (double a : {0.1, 1.0, 2.0}) {
    const GasModel m(a);
    const auto g = build_grid(m.alpha(), 72, 16);
    // Probes span |C| <= 6, which carries all of the weight.
    std::uniform_real_distribution<double> ux(0.5, 10.0), uc(-6.0, 6.0);
    const AsymptoticState s{0.3, -0.7, 0.4, 1.1};
    for (int i = 0; i < 50; ++i) {
      const double x = ux(rng), mu = m.mu_of_c(uc(rng));
      for (int k = 0; k < 4; ++k) {
        const double r =
            transport_residual([&](double xx, double mm) { return m.partial_solution(k, xx, mm); }, x, mu, m, g);
        worst = std::max(worst, std::abs(r));
      }
      const double r = transport_residual([&](double xx, double mm) { return m.h_asymptotic(xx, mm, s); }, x, mu, m, g);
      worst = std::max(worst, std::abs(r));
    }
  }
  return {worst < 1e-9, "worst residual " + sci(worst) + " (limit 1e-09)"};
}

Outcome projection_laws() {
  std::mt19937 rng(12345);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  double worst_idem = 0.0, worst_cons = 0.0;
  for (double a : {0.5, 1.0, 2.0}) {
    const GasModel m(a);
    const auto g = build_grid(m.alpha(), 72, 16);
    for (int trial = 0; trial < 20; ++trial) {
      std::array<double, 5> p{};
      for (auto& v : p) v = u(rng);
      auto h = [&](double mu) {
        const double c = m.c_of_mu(mu);
        return p[0] + c * (p[1] + c * (p[2] + c * (p[3] + c * p[4])));
      };
      const auto k = project(h, m, g);
      const auto kk = project([&](double mu) { return k(m.c_of_mu(mu)); }, m, g);
      worst_idem = std::max({worst_idem, std::abs(kk.c0 - k.c0), std::abs(kk.c1 - k.c1), std::abs(kk.c2 - k.c2)});
      const auto mk = invariant_moments([&](double mu) { return k(m.c_of_mu(mu)) - h(mu); }, m, g);
      for (double v : mk) worst_cons = std::max(worst_cons, std::abs(v));
    }
  }
  return {worst_idem < 1e-9 && worst_cons < 1e-9,
          "idempotence " + sci(worst_idem) + ", conservation " + sci(worst_cons) + " (limit 1e-09)"};
}

double sokhotsky_error(const Dispersion& d, double eta, bool with_eta = true) {
  const cplx lp = d.lambda_boundary(eta, Side::plus);
  const cplx lm = d.lambda_boundary(eta, Side::minus);
  const double factor = with_eta ? eta : 1.0;
  const cplx expect(0.0, kTwoPi * factor * d.model().weight(eta) * d.q_tilde(eta, eta));
  return std::abs((lp - lm) - expect) / std::abs(lp);
}

Outcome sokhotsky() {
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> u(0.005, 0.995);
  std::vector<double> etas(50);
  for (auto& e : etas) e = u(rng);
  auto worst_of = [&](const Dispersion& d, bool with_eta) {
    double w = 0.0;
    for (double e : etas) w = std::max(w, sokhotsky_error(d, e * d.alpha(), with_eta));
    return w;
  };
  const double good = worst_of(make_dispersion(1.0), true);
  double printed_best = 1e300;
  for (MatrixVariant v : {MatrixVariant::printed_lambda11, MatrixVariant::printed_lambda22, MatrixVariant::printed}) {
    printed_best = std::min(printed_best, worst_of(make_dispersion(1.0, v), true));
  }
  const double no_eta = worst_of(make_dispersion(1.0), false);
  const bool ok = good < 1e-7 && printed_best > 1e-7 && no_eta > 1e-7;
  return {ok, "corrected " + sci(good) + " (limit 1e-07); printed variants >= " + sci(printed_best) +
                  ", without eta factor " + sci(no_eta) + " (must fail)"};
}

Outcome dispersion_asymptotics() {
  const auto d = make_dispersion(1.0);
  double worst = 0.0;
  for (double phase : {0.3, 1.1, 2.0, 2.9}) {
    const cplx dir = std::polar(1.0, phase);
    const double r3 = std::pow(1e3, 4) * std::abs(d.lambda(1e3 * dir));
    const double r4 = std::pow(1e4, 4) * std::abs(d.lambda(1e4 * dir));
    worst = std::max(worst, std::abs(r3 / r4 - 1.0));
  }
  return {worst < 1e-2, "z^4 lambda drift " + sci(worst) + " (limit 1e-02)"};
}

Outcome winding() {
  double worst = 0.0;
  bool start_ok = true;
  for (double a : {0.1, 0.5, 1.0, 2.0}) {
    const auto t = ThetaTable::build(make_dispersion(a));
    start_ok = start_ok && t.theta_start() == 0.0;
    worst = std::max(worst, std::abs(t.theta_end() - kTwoPi));
  }
  return {start_ok && worst < 1e-3,
          fmt::format("theta(0) = 0: {}; |theta(alpha-) - 2 pi| <= {} (limit 1e-03)", start_ok ? "yes" : "no",
                      sci(worst))};
}

Outcome factorization_ratio() {
  double worst = 0.0;
  for (double a : {0.1, 0.5, 1.0, 2.0}) {
    const auto& f = solver(a).factorization();
    const auto& d = f.dispersion();
    for (int i = 1; i <= 40; ++i) {
      const double mu = f.alpha() * i / 41.0;
      const cplx xr = f.X_boundary(mu, Side::plus) / f.X_boundary(mu, Side::minus);
      const cplx lr = d.lambda_boundary(mu, Side::plus) / d.lambda_boundary(mu, Side::minus);
      worst = std::max(worst, std::abs(xr - lr));
    }
  }
  return {worst < 1e-6, "sup |X+/X- - lambda+/lambda-| " + sci(worst) + " (limit 1e-06)"};
}

using Series = std::array<double, 4>;

Series multiply(const Series& p, const Series& q) {
  Series r{};
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; i + j < 4; ++j) r[i + j] += p[i] * q[j];
  }
  return r;
}

Series exp_series(const Series& s) {
  Series result{1.0, 0.0, 0.0, 0.0};
  Series term{1.0, 0.0, 0.0, 0.0};
  for (int k = 1; k < 4; ++k) {
    term = multiply(term, s);
    for (int i = 0; i < 4; ++i) result[i] += term[i] / std::tgamma(k + 1.0);
  }
  return result;
}

Outcome v_moments() {
  double worst = 0.0;
  for (double a : {0.5, 1.0, 2.0}) {
    const auto& f = solver(a).factorization();
    const auto m = f.v_moments();
    const int n = 8, terms = 6;
    Eigen::MatrixXd A(n, terms);
    Eigen::VectorXd b(n);
    for (int i = 0; i < n; ++i) {
      const double z = -f.alpha() * 20.0 * std::pow(2.0, i);
      for (int k = 0; k < terms; ++k) A(i, k) = std::pow(z, -k);
      b(i) = (z * f.V(cplx(z, 0.0))).real();
    }
    const Eigen::VectorXd s = A.colwise().norm().cwiseInverse();
    const Eigen::VectorXd c = s.asDiagonal() * (A * s.asDiagonal()).colPivHouseholderQr().solve(b);
    worst = std::max({worst, test::rel(c(0), m.V1), test::rel(c(1), m.V2), test::rel(c(2), m.V3)});
  }
  std::mt19937 rng(17);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  double series = 0.0;
  for (int i = 0; i < 20; ++i) {
    const VMoments v{u(rng), u(rng), u(rng)};
    const auto st = v_star(v);
    const Series prod = multiply({1.0, st.V1, st.V2, st.V3}, exp_series({0.0, v.V1, v.V2, v.V3}));
    series = std::max(series, std::abs(prod[0] - 1.0));
    for (int k = 1; k < 4; ++k) series = std::max(series, std::abs(prod[k]));
  }
  return {worst < 1e-5 && series < 1e-12,
          "fit vs quadrature " + sci(worst) + " (limit 1e-05); starred series defect " + sci(series)};
}

Outcome kl_routes() {
  double worst = 0.0;
  for (double a : {0.5, 1.0, 2.0}) {
    const auto& js = solver(a);
    const auto kl = js.kl_moments();
    const auto fit = js.kl_direct_fit(std::max(1.0, js.alpha()));
    worst = std::max({worst, test::rel(fit.moments.K1, kl.K1), test::rel(fit.moments.K0, kl.K0),
                      test::rel(fit.moments.L1, kl.L1), test::rel(fit.moments.L0, kl.L0)});
  }
  return {worst < 1e-5, "moments vs direct evaluation " + sci(worst) + " (limit 1e-05)"};
}

Outcome boundary_closure() {
  double worst = 0.0, weakest = 1e300;
  for (double a : {0.1, 0.5, 1.0, 2.0}) {
    const auto& js = solver(a);
    const auto sol = js.solve();
    for (auto f : {sol.coefficients(1.0, 0.0), sol.coefficients(0.0, 1.0)}) {
      const double r = js.boundary_residual(f);
      auto bad = f;
      bad.state.eps_T *= 1.1;
      worst = std::max(worst, r);
      weakest = std::min(weakest, js.boundary_residual(bad) / r);
    }
  }
  return {worst < 1e-3 && weakest >= 10.0,
          "residual " + sci(worst) + " (limit 1e-03); 10% eps_T perturbation inflates it " +
              fmt::format("{:.3g}", weakest) + "x (need >= 10x)"};
}

Outcome cross_method() {
  double worst = 0.0;
  for (double a : {0.1, 0.5, 1.0, 2.0}) {
    const auto sol = solver(a).solve();
    const auto u = solve_direct(a, 1.0, 0.0);
    const auto g = solve_direct(a, 0.0, 1.0);
    worst = std::max({worst, test::rel(u.eps_T, sol.eps_T_per_U), test::rel(u.eps_n, sol.eps_n_per_U),
                      test::rel(g.eps_T, sol.eps_T_per_gT), test::rel(g.eps_n, sol.eps_n_per_gT)});
  }
  OracleOptions o;
  o.nx = 150;
  o.tol = 1e-12;
  const auto st = convergence_order(1.0, 0.0, 1.0, o);
  const double order = std::min(st.order_T, st.order_n);
  return {worst < 1e-2 && order >= 1.9, "analytic vs oracle " + sci(worst) + " (limit 1e-02); observed order " +
                                            fmt::format("{:.3f}", order) + " (need >= 1.9)"};
}

Outcome omega_curve() {
  const double zero = std::abs(omega_c_form(0.0));
  double forms = 0.0;
  for (double a : {0.1, 0.5, 1.0, 2.0, 5.0}) {
    forms = std::max(forms, std::abs(omega_mu_form(a, build_grid(1.0 / a, 72, 16)) - omega_c_form(a)));
  }
  const char* argv[] = {"kinjump", "omega", "--a-min", "0", "--a-max", "5", "--a-steps", "101"};
  std::ostringstream out, err;
  const auto t0 = std::chrono::steady_clock::now();
  const int code = cli::run(8, argv, out, err);
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  // Smoothness: every emitted value matches an adaptive reference quadrature
  // far below the 1e-8 noise scale.
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  int rows = 0;
  double noise = 0.0;
  while (std::getline(in, line)) {
    double ap = 0.0, a = 0.0, w = 0.0;
    char comma = 0;
    std::istringstream ls(line);
    ls >> ap >> comma >> a >> comma >> w;
    noise = std::max(noise, std::abs(w - test::reference_omega(a)));
    ++rows;
  }
  const bool ok = zero < 1e-10 && forms < 1e-10 && code == 0 && rows == 101 && seconds < 5.0 && noise < 1e-9;
  return {ok, fmt::format("omega(0) {}; mu vs C form {}; {} rows in {:.3f} s; deviation from reference {}", sci(zero),
                          sci(forms), rows, seconds, sci(noise))};
}

Outcome printed_report() {
  const char* argv[] = {"kinjump", "coeffs", "--a", "1"};
  std::ostringstream out, err;
  const int code = cli::run(4, argv, out, err);
  const bool present = err.str().find("printed-determinant check") != std::string::npos;
  std::string line = err.str().substr(0, err.str().find('\n'));
  return {present && code == 0, "report emitted: " + line};
}

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {1, "exact-solution residuals", 5.0, true, residuals},
      {2, "projection laws", 2.0, true, projection_laws},
      {3, "Sokhotsky closure", 30.0, true, sokhotsky},
      {4, "dispersion asymptotics", 10.0, true, dispersion_asymptotics},
      {5, "theta winding", 60.0, true, winding},
      {6, "RH factorization", 60.0, true, factorization_ratio},
      {7, "V-moment consistency", 10.0, true, v_moments},
      {8, "K/L two routes", 30.0, true, kl_routes},
      {9, "boundary closure", 300.0, true, boundary_closure},
      {10, "cross-method equivalence", 600.0, true, cross_method},
      {11, "omega(a)", 30.0, true, omega_curve},
      {12, "printed-determinant diagnostic (informational)", 30.0, false, printed_report},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.body();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = seconds < c.budget_seconds;
    const bool pass = o.pass && in_time;
    fmt::print("{} criterion {:>2} {}: {} [{:.2f} s of {:.0f} s]\n", pass ? "PASS" : "FAIL", c.id, c.title, o.detail,
               seconds, c.budget_seconds);
    if (!pass && c.gated) ++failures;
  }
  fmt::print("{} gated criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
