#ifndef DAUCTION_SEARCH_BOX_HPP
#define DAUCTION_SEARCH_BOX_HPP

#include <cmath>
#include <vector>

#include "dauction/numeric.hpp"
#include "dauction/scenario.hpp"

namespace dauction {

/// Compact region that contains every sensible bid on one link.
///
/// Total payment above `payment` makes -V(2P / max U'(0)) + P negative, so the
/// supplier never profits from it. A user paying at most `payment` receives at
/// most `rate[m]` (from r U'(r) / 2 <= P) and so faces a signal at most
/// 4 P / U'(R)^2.
struct SearchBox {
  double payment = 0.0;
  std::vector<double> rate;
  std::vector<double> signal;
  /// False when some pay-off or the cost lacks the growth needed for the
  /// bound; the box is then a sampling heuristic only.
  bool exact = true;
};

inline double payment_bound(const CostSpec& cost, double top_marginal) {
  const double scale = 2.0 / top_marginal;
  const double limit = std::isfinite(cost.domain_end()) ? cost.domain_end() / scale : kInfinity;
  auto g = [&](double s) { return s - cost.value(std::min(scale * s, cost.domain_end())); };
  double hi = 1.0;
  while (hi < limit && g(hi) > 0.0) {
    hi *= 2.0;
    if (hi > 1e300) break;
  }
  hi = std::min(hi, limit);
  if (g(hi) > 0.0) return hi;
  return numeric::bisect_decreasing(g, 0.0, hi, 1e-14).hi;
}

inline SearchBox search_box(const Scenario& s, std::size_t link) {
  SearchBox box;
  const CostSpec& cost = s.links.at(link).cost;
  box.exact = cost.has_superlinear_growth();
  box.payment = payment_bound(cost, s.max_marginal_at_zero()) * (1.0 + 1e-9);
  for (const auto& u : s.users) {
    double r;
    if (u.has_unbounded_revenue_growth()) {
      auto g = [&](double t) { return box.payment - 0.5 * t * u.marginal(t); };
      double hi = 1.0;
      while (g(hi) > 0.0) hi *= 2.0;
      r = numeric::bisect_decreasing(g, 0.0, hi, 1e-14).hi;
    } else {
      box.exact = false;
      r = 8.0 * box.payment / u.marginal_at_zero();
    }
    const double slope = u.marginal(r);
    box.rate.push_back(r);
    box.signal.push_back(4.0 * box.payment / (slope * slope) * (1.0 + 1e-9));
  }
  return box;
}

}  // namespace dauction

#endif  // DAUCTION_SEARCH_BOX_HPP
