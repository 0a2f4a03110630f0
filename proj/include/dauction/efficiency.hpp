#ifndef DAUCTION_EFFICIENCY_HPP
#define DAUCTION_EFFICIENCY_HPP

#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "dauction/numeric.hpp"
#include "dauction/system_optimum.hpp"

namespace dauction {

struct EfficiencyResult {
  double stackelberg_utility = std::numeric_limits<double>::quiet_NaN();
  double social_utility = std::numeric_limits<double>::quiet_NaN();
  double ratio = std::numeric_limits<double>::quiet_NaN();
  double bound = std::numeric_limits<double>::quiet_NaN();
  double c_at_infimum = std::numeric_limits<double>::quiet_NaN();
};

/// Utility of `equilibrium_rates` relative to the social optimum.
inline EfficiencyResult efficiency(const Scenario& s, const Matrix& equilibrium_rates) {
  EfficiencyResult r;
  r.stackelberg_utility = social_utility(s, equilibrium_rates);
  r.social_utility = solve_ml_system(s).utility;
  if (r.social_utility < tol::kUndefinedUtility)
    throw UndefinedRatioError("social utility " + std::to_string(r.social_utility) +
                              " is too small for an efficiency ratio");
  r.ratio = r.stackelberg_utility / r.social_utility;
  return r;
}

struct BoundTerms {
  double numerator = 0.0;
  double denominator = 0.0;
};

/// Surplus a single linear user of slope c generates when served at v = c/2
/// (numerator) and at v = c (denominator), summed over links.
inline BoundTerms bound_terms(std::span<const CostSpec> costs, double c) {
  if (!(c > 0.0)) throw InputError("bound slope must be positive");
  BoundTerms t;
  for (const auto& v : costs) {
    const double half = v.marginal_inverse(0.5 * c);
    const double full = v.marginal_inverse(c);
    t.numerator += c * half - v.value(half);
    t.denominator += c * full - v.value(full);
  }
  return t;
}

/// Worst-case ratio for a user of slope c. NaN when there is nothing to serve.
inline double bound_ratio_at(std::span<const CostSpec> costs, double c) {
  const BoundTerms t = bound_terms(costs, c);
  if (!(t.denominator > tol::kUndefinedUtility)) return std::numeric_limits<double>::quiet_NaN();
  return t.numerator / t.denominator;
}

struct BoundOptions {
  double c_min = 1e-3;
  double c_max = 1e3;
  int grid_points = 129;
  double c_tol = 1e-8;
};

/// (c, ratio) rows on the log grid; points with nothing to serve are dropped.
inline std::vector<std::pair<double, double>> bound_curve(std::span<const CostSpec> costs,
                                                          const BoundOptions& options = {}) {
  std::vector<std::pair<double, double>> rows;
  for (double c : numeric::log_space(options.c_min, options.c_max, options.grid_points)) {
    try {
      const double h = bound_ratio_at(costs, c);
      if (!std::isnan(h)) rows.emplace_back(c, h);
    } catch (const RangeError& e) {
      throw RangeError(std::string(e.what()) + " at c = " + std::to_string(c), c);
    }
  }
  return rows;
}

/// Infimum over c of the worst-case ratio: grid scan, then golden-section
/// refinement between the neighbours of the smallest grid value.
inline EfficiencyResult efficiency_bound(std::span<const CostSpec> costs,
                                         const BoundOptions& options = {}) {
  if (costs.empty()) throw InputError("efficiency bound needs at least one cost");
  const auto rows = bound_curve(costs, options);
  if (rows.empty()) throw UndefinedRatioError("no probed slope yields positive social utility");
  std::size_t best = 0;
  for (std::size_t i = 1; i < rows.size(); ++i)
    if (rows[i].second < rows[best].second) best = i;

  EfficiencyResult r;
  r.bound = rows[best].second;
  r.c_at_infimum = rows[best].first;
  const double a = rows[best > 0 ? best - 1 : best].first;
  const double b = rows[best + 1 < rows.size() ? best + 1 : best].first;
  if (b > a) {
    auto h = [&](double c) {
      const double v = bound_ratio_at(costs, c);
      return std::isnan(v) ? kInfinity : v;
    };
    const auto [c, v] = numeric::golden_section_min(h, a, b, options.c_tol);
    if (v < r.bound) {
      r.bound = v;
      r.c_at_infimum = c;
    }
  }
  return r;
}

inline EfficiencyResult efficiency_bound(const CostSpec& cost, const BoundOptions& options = {}) {
  return efficiency_bound(std::span<const CostSpec>(&cost, 1), options);
}

/// (1/2)^{n/(n-1)} (2n - 1) / (n - 1): the worst case for V(y) = b y^n.
inline double polynomial_bound_closed_form(int n) {
  if (n < 2) throw InputError("polynomial bound requires n >= 2");
  const double k = static_cast<double>(n);
  return std::pow(0.5, k / (k - 1.0)) * (2.0 * k - 1.0) / (k - 1.0);
}

/// Piecewise marginal cost whose worst-case ratio at slope c is close to
/// 2^{-n}. The marginal starts just under c/2, reaches c/2 at rate 2^{-n},
/// creeps up until rate 1 - 2^{-n-1}, then climbs to c at rate 1. A final
/// segment to (2, 2c) keeps v^{-1}(c) inside the table.
inline CostSpec worst_case_family(double c, int n) {
  if (!(c > 0.0) || !std::isfinite(c)) throw InputError("worst-case family needs c > 0");
  if (n < 1) throw InputError("worst-case family index must be >= 1");
  const double e = std::ldexp(1.0, -n);
  return CostSpec::piecewise_marginal({
      {0.0, 0.5 * c * (1.0 - e)},
      {e, 0.5 * c},
      {1.0 - 0.5 * e, 0.5 * c * (1.0 + e)},
      {1.0, c},
      {2.0, 2.0 * c},
  });
}

}  // namespace dauction

#endif  // DAUCTION_EFFICIENCY_HPP
