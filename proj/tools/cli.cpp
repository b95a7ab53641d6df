#include "cli.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>
#include <fmt/ostream.h>
#include <json.hpp>

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <functional>
#include <numbers>
#include <ostream>
#include <sstream>
#include <thread>

#include "kinjump/errors.hpp"
#include "kinjump/jump.hpp"
#include "kinjump/model.hpp"
#include "kinjump/oracle.hpp"

namespace kinjump::cli {

namespace {

using json = nlohmann::ordered_json;

constexpr double kBoundaryTolerance = 1e-3;
constexpr double kWindingTolerance = 1e-3;
constexpr double kValidateTolerance = 1e-2;

// Thrown for invalid configurations detected after parsing.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string num(double v) { return fmt::format("{:.17g}", v); }

double rel_diff(double x, double ref) { return std::abs(x - ref) / std::max(std::abs(ref), 1e-300); }

// Runs f(0..n-1) on a bounded pool; results stay indexed by input position.
template <class T>
std::vector<T> parallel_map(std::size_t n, const std::function<T(std::size_t)>& f) {
  std::vector<T> out(n);
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        out[i] = f(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const std::size_t workers = std::min<std::size_t>(worker_count(), n);
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

JumpOptions jump_options(const RunConfig& c) {
  JumpOptions o;
  o.panels = c.panels;
  o.nodes_per_panel = c.nodes;
  o.theta.n_samples = c.theta_samples;
  o.variant = matrix_variant_from_string(c.variant);
  return o;
}

OracleOptions oracle_options(const RunConfig& c) {
  OracleOptions o;
  o.nx = c.nx;
  o.n_mu = c.n_mu;
  o.x_max = c.x_max;
  return o;
}

struct CoeffRow {
  double a_physical = 0.0;
  JumpSolution sol;
  double boundary_residual = 0.0;
  double seconds = 0.0;
};

CoeffRow compute_row(double a_physical, const JumpOptions& opts) {
  const auto t0 = std::chrono::steady_clock::now();
  CoeffRow r;
  r.a_physical = a_physical;
  const JumpSolver solver(rescale_slope(a_physical), opts);
  r.sol = solver.solve();
  r.boundary_residual = std::max(solver.boundary_residual(r.sol.coefficients(1.0, 0.0)),
                                 solver.boundary_residual(r.sol.coefficients(0.0, 1.0)));
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

bool row_ok(const CoeffRow& r) {
  return r.boundary_residual < kBoundaryTolerance &&
         std::abs(r.sol.theta_winding - 2.0 * std::numbers::pi) < kWindingTolerance;
}

json printed_json(const JumpSolution& s) {
  const auto& p = s.printed;
  return json{{"Delta_printed", p.Delta},
              {"Delta_assembled", s.determinant},
              {"eps_T_per_U_printed", p.eps_T_per_U},
              {"eps_n_per_U_printed", p.eps_n_per_U},
              {"eps_T_per_gT_printed", p.eps_T_per_gT},
              {"eps_n_per_gT_printed", p.eps_n_per_gT},
              {"rel_discrepancy_eps_T_per_U", rel_diff(p.eps_T_per_U, s.eps_T_per_U)},
              {"rel_discrepancy_eps_n_per_U", rel_diff(p.eps_n_per_U, s.eps_n_per_U)},
              {"rel_discrepancy_eps_T_per_gT", rel_diff(p.eps_T_per_gT, s.eps_T_per_gT)},
              {"rel_discrepancy_eps_n_per_gT", rel_diff(p.eps_n_per_gT, s.eps_n_per_gT)}};
}

// Informational only: the printed formulas are not used for any exit code.
void report_printed(std::ostream& err, double a_physical, const JumpSolution& s) {
  const auto& p = s.printed;
  fmt::print(err,
             "printed-determinant check a_physical={} a={}: Delta printed={} assembled={}; "
             "rel discrepancy eps_T/U={:.3g} eps_n/U={:.3g} eps_T/gT={:.3g} eps_n/gT={:.3g} (informational)\n",
             num(a_physical), num(s.a), num(p.Delta), num(s.determinant), rel_diff(p.eps_T_per_U, s.eps_T_per_U),
             rel_diff(p.eps_n_per_U, s.eps_n_per_U), rel_diff(p.eps_T_per_gT, s.eps_T_per_gT),
             rel_diff(p.eps_n_per_gT, s.eps_n_per_gT));
}

const std::vector<std::string> kCoeffColumns = {
    "a_physical", "a",  "eps_T_per_U", "eps_T_per_gT", "eps_n_per_U", "eps_n_per_gT", "omega", "V1",
    "V2",         "V3", "K1",          "K0",           "L1",          "L0",           "boundary_residual",
    "theta_winding"};

std::vector<double> coeff_values(const CoeffRow& r) {
  const auto& s = r.sol;
  return {r.a_physical,   s.a,    s.eps_T_per_U, s.eps_T_per_gT, s.eps_n_per_U, s.eps_n_per_gT,
          s.omega,        s.V.V1, s.V.V2,        s.V.V3,         s.kl.K1,       s.kl.K0,
          s.kl.L1,        s.kl.L0, r.boundary_residual, s.theta_winding};
}

void write_csv(std::ostream& os, const std::vector<std::string>& cols, const std::vector<std::vector<double>>& rows) {
  for (std::size_t k = 0; k < cols.size(); ++k) os << (k ? "," : "") << cols[k];
  os << '\n';
  for (const auto& row : rows) {
    for (std::size_t k = 0; k < row.size(); ++k) os << (k ? "," : "") << num(row[k]);
    os << '\n';
  }
}

// Writes to --out when given, otherwise to `out`.
void emit(const RunConfig& c, std::ostream& out, const std::string& text) {
  if (c.out.empty()) {
    out << text;
    return;
  }
  std::ofstream f(c.out, std::ios::binary);
  if (!f) throw ConfigError("cannot open output file " + c.out);
  f << text;
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

json config_json(const RunConfig& c) {
  json j{{"subcommand", c.subcommand}, {"panels", c.panels},     {"nodes", c.nodes},
         {"theta_samples", c.theta_samples}, {"variant", c.variant}};
  j["seed"] = c.seed ? json(*c.seed) : json(nullptr);
  return j;
}

json oracle_json(const OracleOptions& o) {
  return json{{"nx", o.nx}, {"n_mu", o.n_mu}, {"x_max", o.x_max}, {"tol", o.tol}};
}

int cmd_coeffs(const RunConfig& c, std::ostream& out, std::ostream& err) {
  const auto slopes = c.slopes();
  for (double s : slopes) {
    if (!(s > 0.0)) throw ConfigError("analytic subcommands need a > 0");
  }
  const JumpOptions opts = jump_options(c);
  const auto rows = parallel_map<CoeffRow>(slopes.size(), [&](std::size_t i) { return compute_row(slopes[i], opts); });
  bool ok = true;
  for (const auto& r : rows) {
    report_printed(err, r.a_physical, r.sol);
    if (c.verbose) {
      fmt::print(err, "a_physical={} solved in {:.3f} s, laurent growth {:.4f}\n", num(r.a_physical), r.seconds,
                 r.sol.laurent_growth);
    }
    if (!row_ok(r)) {
      ok = false;
      fmt::print(err, "tolerance failure at a_physical={}: boundary_residual={} theta_winding={}\n",
                 num(r.a_physical), num(r.boundary_residual), num(r.sol.theta_winding));
    }
  }
  if (c.format == "json") {
    json j = config_json(c);
    json arr = json::array();
    for (const auto& r : rows) {
      json row;
      const auto v = coeff_values(r);
      for (std::size_t k = 0; k < kCoeffColumns.size(); ++k) row[kCoeffColumns[k]] = v[k];
      row["printed_determinants"] = printed_json(r.sol);
      arr.push_back(std::move(row));
    }
    j["rows"] = std::move(arr);
    emit(c, out, dump(j));
  } else {
    std::vector<std::vector<double>> table;
    for (const auto& r : rows) table.push_back(coeff_values(r));
    std::ostringstream os;
    write_csv(os, kCoeffColumns, table);
    emit(c, out, os.str());
  }
  return ok ? kOk : kToleranceFailure;
}

int cmd_omega(const RunConfig& c, std::ostream& out, std::ostream& err) {
  const auto slopes = c.slopes();
  const auto t0 = std::chrono::steady_clock::now();
  const auto omegas =
      parallel_map<double>(slopes.size(), [&](std::size_t i) { return omega_c_form(rescale_slope(slopes[i])); });
  if (c.verbose) {
    fmt::print(err, "omega sweep of {} points in {:.3f} s\n", slopes.size(),
               std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
  }
  if (c.format == "json") {
    json j = config_json(c);
    json arr = json::array();
    for (std::size_t i = 0; i < slopes.size(); ++i) {
      arr.push_back(json{{"a_physical", slopes[i]}, {"a", rescale_slope(slopes[i])}, {"omega", omegas[i]}});
    }
    j["rows"] = std::move(arr);
    emit(c, out, dump(j));
  } else {
    std::vector<std::vector<double>> table;
    for (std::size_t i = 0; i < slopes.size(); ++i) table.push_back({slopes[i], rescale_slope(slopes[i]), omegas[i]});
    std::ostringstream os;
    write_csv(os, {"a_physical", "a", "omega"}, table);
    emit(c, out, os.str());
  }
  return kOk;
}

double single_slope(const RunConfig& c) {
  if (!c.a) throw ConfigError(c.subcommand + " needs --a");
  if (!(*c.a > 0.0)) throw ConfigError(c.subcommand + " needs a > 0");
  return *c.a;
}

int cmd_validate(const RunConfig& c, std::ostream& out, std::ostream& err) {
  const double a_phys = single_slope(c);
  const double a = rescale_slope(a_phys);
  const CoeffRow row = compute_row(a_phys, jump_options(c));
  report_printed(err, a_phys, row.sol);
  const OracleOptions oo = oracle_options(c);
  if (c.verbose) fmt::print(err, "oracle: nx={} n_mu={} x_max={}\n", oo.nx, oo.n_mu, num(oo.x_max));
  const FieldSolution fu = solve_direct(a, 1.0, 0.0, oo);
  const FieldSolution fg = solve_direct(a, 0.0, 1.0, oo);

  const std::array<std::string, 4> names = {"eps_T_per_U", "eps_T_per_gT", "eps_n_per_U", "eps_n_per_gT"};
  const std::array<double, 4> analytic = {row.sol.eps_T_per_U, row.sol.eps_T_per_gT, row.sol.eps_n_per_U,
                                          row.sol.eps_n_per_gT};
  const std::array<double, 4> oracle = {fu.eps_T, fg.eps_T, fu.eps_n, fg.eps_n};
  json j = config_json(c);
  j["a_physical"] = a_phys;
  j["a"] = a;
  json ja, jo, jr;
  bool ok = true;
  for (int k = 0; k < 4; ++k) {
    const double r = rel_diff(oracle[k], analytic[k]);
    ja[names[k]] = analytic[k];
    jo[names[k]] = oracle[k];
    jr[names[k]] = r;
    ok = ok && r < kValidateTolerance;
  }
  j["analytic"] = ja;
  j["oracle"] = jo;
  j["relative_difference"] = jr;
  j["tolerance"] = kValidateTolerance;
  j["boundary_residual"] = row.boundary_residual;
  json meta = oracle_json(oo);
  auto run_meta = [](const FieldSolution& f) {
    return json{{"iterations", f.iterations},         {"linear_solves", f.linear_solves},
                {"residual", f.residual},             {"fit_slope_n", f.fit.slope_n},
                {"fit_slope_T", f.fit.slope_T},       {"fit_curvature", f.fit.curvature},
                {"fit_slope_drift", f.fit.slope_drift}, {"fit_rms", f.fit.rms}};
  };
  meta["per_U"] = run_meta(fu);
  meta["per_gT"] = run_meta(fg);
  j["oracle_metadata"] = std::move(meta);
  j["printed_determinants"] = printed_json(row.sol);
  j["pass"] = ok;
  emit(c, out, dump(j));
  if (!ok) fmt::print(err, "validation failure: analytic and oracle differ by more than {}\n", kValidateTolerance);
  return ok ? kOk : kToleranceFailure;
}

int cmd_field(const RunConfig& c, std::ostream& out, std::ostream& err) {
  const double a_phys = single_slope(c);
  const double a = rescale_slope(a_phys);
  if (c.source != "analytic" && c.source != "oracle") throw ConfigError("--source must be analytic or oracle");
  const OracleOptions oo = oracle_options(c);
  std::vector<double> xs, mus;
  std::vector<std::vector<double>> h;
  double eps_n = 0.0, eps_T = 0.0;
  int code = kOk;
  json extra;
  // Both sources share the oracle grids so that dumps can be diffed.
  const JumpSolver solver(a, jump_options(c));
  const JumpSolution sol = solver.solve();
  report_printed(err, a_phys, sol);
  const FieldCoefficients fc = sol.coefficients(c.U, c.g_T);
  if (c.source == "oracle") {
    const FieldSolution f = solve_direct(a, c.U, c.g_T, oo);
    xs = f.x;
    mus = f.mu;
    h.assign(xs.size(), std::vector<double>(mus.size()));
    for (std::size_t i = 0; i < xs.size(); ++i) {
      for (std::size_t j = 0; j < mus.size(); ++j) h[i][j] = f.h(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    }
    eps_n = f.eps_n;
    eps_T = f.eps_T;
    extra = json{{"iterations", f.iterations}, {"residual", f.residual}};
  } else {
    const DiscreteOrdinates grid(a, oo);
    xs = grid.x();
    mus = grid.mu();
    h = solver.reconstruct_field(xs, mus, fc);
    eps_n = fc.state.eps_n;
    eps_T = fc.state.eps_T;
    const double residual = solver.boundary_residual(fc);
    extra = json{{"boundary_residual", residual}};
    if (!(residual < kBoundaryTolerance)) {
      fmt::print(err, "tolerance failure: boundary_residual={}\n", num(residual));
      code = kToleranceFailure;
    }
  }
  std::ostringstream os;
  os << "x,mu,h\n";
  for (std::size_t i = 0; i < xs.size(); ++i) {
    for (std::size_t j = 0; j < mus.size(); ++j) os << num(xs[i]) << ',' << num(mus[j]) << ',' << num(h[i][j]) << '\n';
  }
  emit(c, out, os.str());
  if (!c.out.empty()) {
    json j = config_json(c);
    j["source"] = c.source;
    j["a_physical"] = a_phys;
    j["a"] = a;
    j["U"] = c.U;
    j["g_T"] = c.g_T;
    j["eps_T"] = eps_T;
    j["eps_n"] = eps_n;
    j["x"] = xs;
    j["mu"] = mus;
    j["oracle_grid"] = oracle_json(oo);
    j["diagnostics"] = std::move(extra);
    j["printed_determinants"] = printed_json(sol);
    std::ofstream f(c.out + ".json", std::ios::binary);
    if (!f) throw ConfigError("cannot open sidecar " + c.out + ".json");
    f << dump(j);
  } else if (c.verbose) {
    fmt::print(err, "no --out given: JSON sidecar skipped\n");
  }
  return code;
}

void validate_config(RunConfig& c) {
  if (c.a && c.range_given) throw ConfigError("give either --a or an a-range, not both");
  if (c.a_steps < 1) throw ConfigError("--a-steps must be >= 1");
  if (!(c.a_min <= c.a_max)) throw ConfigError("--a-min must not exceed --a-max");
  if (c.a_log && !(c.a_min > 0.0)) throw ConfigError("--a-log needs --a-min > 0");
  if (c.a && !(*c.a >= 0.0 && std::isfinite(*c.a))) throw ConfigError("--a must be finite and non-negative");
  if (c.a_min < 0.0 || !std::isfinite(c.a_max)) throw ConfigError("a-range must be finite and non-negative");
  if (c.panels < 1 || c.nodes < 2 || c.theta_samples < 16) throw ConfigError("grid overrides out of range");
  if (c.nx < 8 || c.n_mu < 8 || c.n_mu % 2 != 0) throw ConfigError("--nx >= 8 and even --nmu >= 8 required");
  if (!(c.x_max >= 1.0)) throw ConfigError("--xmax must be at least 1");
  try {
    (void)matrix_variant_from_string(c.variant);
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }
}

}  // namespace

std::vector<double> RunConfig::slopes() const {
  if (a) return {*a};
  std::vector<double> s(static_cast<std::size_t>(a_steps));
  for (int i = 0; i < a_steps; ++i) {
    const double t = a_steps == 1 ? 0.0 : static_cast<double>(i) / (a_steps - 1);
    s[static_cast<std::size_t>(i)] =
        a_log ? a_min * std::pow(a_max / a_min, t) : a_min + (a_max - a_min) * t;
  }
  // Pin the requested end points exactly.
  if (a_steps > 1) s.back() = a_max;
  return s;
}

unsigned worker_count() {
  if (const char* env = std::getenv("KINJUMP_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return static_cast<unsigned>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  RunConfig c;
  CLI::App app{"Temperature and density jump coefficients for the BGK half-space problem"};
  app.require_subcommand(1, 1);

  std::optional<double> a_min, a_max;
  std::optional<int> a_steps;
  std::optional<double> U, g_T;
  auto add_common = [&](CLI::App* s, bool range, bool forcing, bool oracle) {
    s->add_option("--a", c.a, "Physical slope (rescaled internally by sqrt(pi))");
    if (range) {
      s->add_option("--a-min", a_min, "Smallest physical slope of the sweep");
      s->add_option("--a-max", a_max, "Largest physical slope of the sweep");
      s->add_option("--a-steps", a_steps, "Number of slopes in the sweep");
      s->add_flag("--a-log", c.a_log, "Logarithmic spacing");
    }
    if (forcing) {
      s->add_option("--U", U, "Evaporation velocity forcing");
      s->add_option("--gT", g_T, "Far-field temperature gradient");
    }
    s->add_option("--panels", c.panels, "Cut-grid panels");
    s->add_option("--nodes", c.nodes, "Gauss nodes per panel");
    s->add_option("--theta-samples", c.theta_samples, "Seed samples of the phase table");
    s->add_option("--variant", c.variant, "Dispersion matrix variant")
        ->check(CLI::IsMember({"corrected", "printed_lambda11", "printed_lambda22", "printed"}));
    if (oracle) {
      s->add_option("--nx", c.nx, "Oracle x cells");
      s->add_option("--nmu", c.n_mu, "Oracle ordinates (even)");
      s->add_option("--xmax", c.x_max, "Oracle slab length in mean free paths");
    }
    s->add_option("--format", c.format, "Output format")->check(CLI::IsMember({"csv", "json"}));
    s->add_option("--out", c.out, "Output path (stdout when omitted)");
    s->add_option("--seed", c.seed, "Reserved; the pipeline is deterministic");
    s->add_flag("--verbose", c.verbose, "Progress and timings on stderr");
  };
  add_common(app.add_subcommand("coeffs", "Jump coefficients for one slope or a range"), true, false, false);
  add_common(app.add_subcommand("sweep", "Jump coefficients over a range of slopes"), true, false, false);
  add_common(app.add_subcommand("omega", "omega(a) table"), true, false, false);
  add_common(app.add_subcommand("validate", "Analytic coefficients against the discrete-ordinates oracle"), false,
             false, true);
  CLI::App* field = app.add_subcommand("field", "Dump h(x, mu) on the oracle grid");
  add_common(field, false, true, true);
  field->add_option("--source", c.source, "analytic or oracle")->check(CLI::IsMember({"analytic", "oracle"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    std::ostringstream o, er;
    const int rc = app.exit(e, o, er);
    out << o.str();
    err << er.str();
    return rc == 0 ? kOk : kConfigError;
  }

  c.subcommand = app.get_subcommands().front()->get_name();
  const bool is_omega = c.subcommand == "omega";
  c.range_given = a_min || a_max || a_steps;
  c.a_min = a_min.value_or(is_omega ? 0.0 : 0.1);
  c.a_max = a_max.value_or(5.0);
  c.a_steps = a_steps.value_or(is_omega ? 101 : 50);
  c.forcing_given = U || g_T;
  c.U = U.value_or(0.0);
  c.g_T = g_T.value_or(1.0);

  try {
    validate_config(c);
    if (c.subcommand == "coeffs" && !c.a && !c.range_given) throw ConfigError("coeffs needs --a or an a-range");
    if (c.subcommand == "coeffs" || c.subcommand == "sweep") return cmd_coeffs(c, out, err);
    if (is_omega) return cmd_omega(c, out, err);
    if (c.subcommand == "validate") return cmd_validate(c, out, err);
    return cmd_field(c, out, err);
  } catch (const ConfigError& e) {
    fmt::print(err, "config error: {}\n", e.what());
    return kConfigError;
  } catch (const DomainError& e) {
    fmt::print(err, "config error: {}\n", e.what());
    return kConfigError;
  } catch (const ConvergenceError& e) {
    fmt::print(err, "convergence failure: {}\n", e.what());
    return kOracleFailure;
  } catch (const std::exception& e) {
    fmt::print(err, "pipeline failure: {}\n", e.what());
    return kToleranceFailure;
  }
}

}  // namespace kinjump::cli
