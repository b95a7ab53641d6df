#include "kinjump/quadrature.hpp"

#include <gsl/gsl_integration.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <sstream>

namespace kinjump {

namespace {

struct GlTableDeleter {
  void operator()(gsl_integration_glfixed_table* t) const { gsl_integration_glfixed_table_free(t); }
};

struct GaussRule {
  std::vector<double> x;
  std::vector<double> w;
};

const GaussRule& cached_rule(int n) {
  static std::mutex mutex;
  static std::map<int, GaussRule> rules;
  std::lock_guard lock(mutex);
  auto it = rules.find(n);
  if (it != rules.end()) return it->second;
  std::unique_ptr<gsl_integration_glfixed_table, GlTableDeleter> table(
      gsl_integration_glfixed_table_alloc(static_cast<size_t>(n)));
  if (!table) throw NumericalError("gauss_legendre: GSL failed to build a rule of order " + std::to_string(n));
  GaussRule rule;
  rule.x.resize(n);
  rule.w.resize(n);
  for (int i = 0; i < n; ++i) {
    gsl_integration_glfixed_point(-1.0, 1.0, static_cast<size_t>(i), &rule.x[i], &rule.w[i], table.get());
  }
  return rules.emplace(n, std::move(rule)).first->second;
}

}  // namespace

void gauss_legendre(int n, std::vector<double>& nodes, std::vector<double>& weights) {
  if (n < 1) throw DomainError("gauss_legendre: order must be positive");
  const GaussRule& rule = cached_rule(n);
  nodes = rule.x;
  weights = rule.w;
}

CutGrid CutGrid::from_panels(std::vector<double> bounds, int nodes_per_panel, int level,
                             double tolerance) {
  if (bounds.size() < 2) throw DomainError("CutGrid: need at least one panel");
  if (nodes_per_panel < 1) throw DomainError("CutGrid: nodes_per_panel must be positive");
  for (std::size_t i = 1; i < bounds.size(); ++i) {
    if (!(bounds[i] > bounds[i - 1])) throw DomainError("CutGrid: panel bounds must increase strictly");
  }
  std::vector<double> x, w;
  gauss_legendre(nodes_per_panel, x, w);
  CutGrid grid;
  grid.nodes_.reserve((bounds.size() - 1) * nodes_per_panel);
  grid.weights_.reserve(grid.nodes_.capacity());
  for (std::size_t p = 0; p + 1 < bounds.size(); ++p) {
    const double half = 0.5 * (bounds[p + 1] - bounds[p]);
    const double mid = 0.5 * (bounds[p + 1] + bounds[p]);
    for (int i = 0; i < nodes_per_panel; ++i) {
      grid.nodes_.push_back(mid + half * x[i]);
      grid.weights_.push_back(half * w[i]);
    }
  }
  grid.bounds_ = std::move(bounds);
  grid.nodes_per_panel_ = nodes_per_panel;
  grid.level_ = level;
  grid.tolerance_ = tolerance;
  return grid;
}

CutGrid CutGrid::refined() const {
  std::vector<double> b;
  b.reserve(2 * bounds_.size());
  for (std::size_t i = 0; i + 1 < bounds_.size(); ++i) {
    b.push_back(bounds_[i]);
    b.push_back(0.5 * (bounds_[i] + bounds_[i + 1]));
  }
  b.push_back(bounds_.back());
  return from_panels(std::move(b), nodes_per_panel_, level_ + 1, tolerance_);
}

CutGrid CutGrid::positive_half() const {
  auto zero = std::find(bounds_.begin(), bounds_.end(), 0.0);
  if (zero == bounds_.end()) throw DomainError("CutGrid::positive_half: 0 is not a panel boundary");
  return from_panels(std::vector<double>(zero, bounds_.end()), nodes_per_panel_, level_, tolerance_);
}

bool CutGrid::symmetric() const {
  const std::size_t n = nodes_.size();
  const double scale = std::max(std::abs(lower()), std::abs(upper()));
  for (std::size_t k = 0; k < n; ++k) {
    if (std::abs(nodes_[k] + nodes_[n - 1 - k]) > 1e-14 * scale) return false;
    if (std::abs(weights_[k] - weights_[n - 1 - k]) > 1e-14 * scale) return false;
  }
  return true;
}

CutGrid build_grid(double alpha, int n_panels, int nodes_per_panel, const GradingOptions& options) {
  if (!(alpha > 0.0) || !std::isfinite(alpha)) throw DomainError("build_grid: alpha must be positive and finite");
  if (n_panels < 4 || n_panels % 2 != 0) throw DomainError("build_grid: n_panels must be even and >= 4");
  if (nodes_per_panel < 4) throw DomainError("build_grid: nodes_per_panel must be >= 4");
  if (!(options.ratio > 0.0 && options.ratio < 1.0)) throw DomainError("build_grid: grading ratio must lie in (0,1)");

  const int per_half = n_panels / 2;
  int spare = per_half - 2;  // one core panel and the closing panel are mandatory
  const int end_levels = std::clamp(options.endpoint_levels, 0, spare);
  spare -= end_levels;
  const int origin_levels = std::clamp(options.origin_levels, 0, spare);
  const int core = per_half - 1 - end_levels - origin_levels;

  // Core in the speed variable, mapped back to mu = C / (1 + C / alpha).
  std::vector<double> half{0.0};
  const double first = [&] {
    const double c = options.core_speed / core;
    return c / (1.0 + c / alpha);
  }();
  for (int j = origin_levels; j >= 1; --j) half.push_back(first * std::pow(options.ratio, j));
  for (int k = 1; k <= core; ++k) {
    const double c = options.core_speed * k / core;
    half.push_back(c / (1.0 + c / alpha));
  }
  double b = half.back();
  for (int j = 0; j < end_levels; ++j) {
    b = alpha - options.ratio * (alpha - b);
    half.push_back(b);
  }
  half.push_back(alpha);

  std::vector<double> bounds;
  bounds.reserve(2 * half.size() - 1);
  for (auto it = half.rbegin(); it != half.rend(); ++it) bounds.push_back(-*it);
  bounds.insert(bounds.end(), half.begin() + 1, half.end());
  bounds[half.size() - 1] = 0.0;  // avoid -0.0
  return CutGrid::from_panels(std::move(bounds), nodes_per_panel);
}

namespace detail {

void throw_non_finite(const char* what, double node) {
  std::ostringstream os;
  os.precision(17);
  os << "non-finite " << what << " value at mu = " << node;
  throw NumericalError(os.str());
}

void throw_pole_outside(double pole, double lower, double upper) {
  std::ostringstream os;
  os.precision(17);
  os << "principal_value: pole " << pole << " is outside the open cut (" << lower << ", " << upper << ")";
  throw DomainError(os.str());
}

double derivative_step(double pole, double lower, double upper) {
  const double scale = 0.5 * (upper - lower);
  return std::min(1e-5 * scale, 0.5 * std::min(pole - lower, upper - pole));
}

}  // namespace detail

}  // namespace kinjump
