#ifndef DAUCTION_SYSTEM_OPTIMUM_HPP
#define DAUCTION_SYSTEM_OPTIMUM_HPP

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "dauction/common.hpp"
#include "dauction/numeric.hpp"
#include "dauction/scenario.hpp"

namespace dauction {

struct KktResiduals {
  double user_stationarity = 0.0;
  double link_stationarity = 0.0;
  double capacity_slackness = 0.0;
  double matching_slackness = 0.0;
  double primal_feasibility = 0.0;
  double dual_feasibility = 0.0;

  [[nodiscard]] double max() const {
    return std::max({user_stationarity, link_stationarity, capacity_slackness, matching_slackness,
                     primal_feasibility, dual_feasibility});
  }
};

struct SystemSolution {
  Allocation allocation;
  DualPrices duals;
  double utility = 0.0;
  /// Common marginal price shared by every active user and link.
  double price = 0.0;
  /// Several linear users tie at the clearing price; the split is not unique
  /// and the lowest index received the whole tied share.
  bool degenerate = false;
  KktResiduals residuals;
};

/// KKT conditions of the (multi-link) system problem evaluated at a point.
inline KktResiduals kkt_residuals(const Scenario& s, const Allocation& a, const DualPrices& d) {
  KktResiduals r;
  const std::size_t M = s.num_users();
  const std::size_t L = s.num_links();
  for (std::size_t m = 0; m < M; ++m) {
    const double slope = s.users[m].marginal(std::max(0.0, a.x.row_sum(m)));
    for (std::size_t l = 0; l < L; ++l) {
      const double mu = d.mu(m, l);
      r.user_stationarity = std::max(r.user_stationarity, a.x(m, l) > 0.0
                                                              ? std::abs(slope - mu)
                                                              : std::max(0.0, slope - mu));
      r.matching_slackness =
          std::max(r.matching_slackness, std::abs(mu * (a.x(m, l) - a.y(m, l))));
      r.primal_feasibility = std::max({r.primal_feasibility, a.x(m, l) - a.y(m, l),
                                       -a.x(m, l), -a.y(m, l)});
      r.dual_feasibility = std::max(r.dual_feasibility, -mu);
    }
  }
  for (std::size_t l = 0; l < L; ++l) {
    const double total = a.y.column_sum(l);
    const double slope = s.links[l].cost.marginal(std::max(0.0, total)) + d.lambda[l];
    for (std::size_t m = 0; m < M; ++m) {
      const double mu = d.mu(m, l);
      r.link_stationarity = std::max(r.link_stationarity, a.y(m, l) > 0.0
                                                              ? std::abs(slope - mu)
                                                              : std::max(0.0, mu - slope));
    }
    if (s.links[l].bounded()) {
      r.capacity_slackness =
          std::max(r.capacity_slackness, std::abs(d.lambda[l] * (total - s.links[l].capacity)));
      r.primal_feasibility = std::max(r.primal_feasibility, total - s.links[l].capacity);
    } else {
      r.capacity_slackness = std::max(r.capacity_slackness, std::abs(d.lambda[l]));
    }
    r.dual_feasibility = std::max(r.dual_feasibility, -d.lambda[l]);
  }
  return r;
}

namespace detail {

// Rate a link offers at marginal price w: v^{-1}(w) capped by capacity.
inline double link_supply(const Link& link, double w) {
  if (link.bounded() && link.capacity <= 0.0) return 0.0;
  if (w <= link.cost.marginal_at_zero()) return 0.0;
  if (link.bounded() && link.capacity <= link.cost.domain_end() &&
      link.cost.marginal(link.capacity) <= w)
    return link.capacity;
  return std::min(link.capacity, link.cost.marginal_inverse(w));
}

inline double user_demand(const PayoffSpec& u, double w) { return u.marginal_inverse(w); }

}  // namespace detail

/// Social optimum of the parallel-link system problem.
///
/// Users only care about their total rate and links are parallel, so the
/// optimum clears the market at one marginal price w: every active user has
/// U_m'(X_m) = w and every active link has v_l(Y_l) + lambda_l = w. The price
/// is found by bisection on aggregate excess demand over [eps, max U'(0)];
/// linear users contribute a jump at their slope, and the tied users at a
/// jump absorb the residual supply (lowest index first). Per-link rates are
/// then dealt out to users in index order.
inline SystemSolution solve_ml_system(const Scenario& s) {
  s.validate();
  const std::size_t M = s.num_users();
  const std::size_t L = s.num_links();

  auto supply = [&](double w) {
    double total = 0.0;
    for (const auto& link : s.links) total += detail::link_supply(link, w);
    return total;
  };
  auto excess = [&](double w) {
    double demand = 0.0;
    for (const auto& u : s.users) demand += detail::user_demand(u, w);
    if (std::isinf(demand)) return kInfinity;
    return demand - supply(w);
  };

  const double top = s.max_marginal_at_zero();
  double lo = tol::kBracketFloor;
  double price = lo;
  if (excess(lo) > 0.0) {
    const auto br = numeric::bisect_decreasing(excess, lo, top);
    price = 0.5 * (br.lo + br.hi);
    // A linear jump inside the final bracket is the clearing price itself.
    const double slack = 1e-12 * std::max(1.0, top);
    for (const auto& u : s.users)
      if (u.is_linear() && u.parameter() >= br.lo - slack && u.parameter() <= br.hi + slack)
        price = u.parameter();
  }

  std::vector<double> link_rate(L);
  double supplied = 0.0;
  for (std::size_t l = 0; l < L; ++l) {
    link_rate[l] = detail::link_supply(s.links[l], price);
    supplied += link_rate[l];
  }

  std::vector<double> user_rate(M, 0.0);
  std::vector<std::size_t> tied;
  double strict_demand = 0.0;
  for (std::size_t m = 0; m < M; ++m) {
    const auto& u = s.users[m];
    if (u.is_linear()) {
      if (u.parameter() == price) tied.push_back(m);
    } else {
      user_rate[m] = detail::user_demand(u, price);
      strict_demand += user_rate[m];
    }
  }
  SystemSolution out;
  if (!tied.empty()) user_rate[tied.front()] = std::max(0.0, supplied - strict_demand);
  out.degenerate = tied.size() > 1;

  // Northwest-corner assignment of user totals onto link totals.
  Matrix x(M, L);
  std::vector<double> room = link_rate;
  std::size_t next_link = 0;
  for (std::size_t m = 0; m < M; ++m) {
    double need = user_rate[m];
    while (need > 0.0 && next_link < L) {
      const double take = std::min(need, room[next_link]);
      x(m, next_link) += take;
      need -= take;
      room[next_link] -= take;
      if (room[next_link] <= 0.0) ++next_link;
    }
  }

  out.allocation = Allocation{x, x};
  out.price = price;
  out.duals.lambda.assign(L, 0.0);
  out.duals.mu = Matrix(M, L, price);
  for (std::size_t l = 0; l < L; ++l) {
    const Link& link = s.links[l];
    const double rate = out.allocation.y.column_sum(l);
    if (link.bounded() && rate >= link.capacity - tol::kPrimalFeasibility)
      out.duals.lambda[l] = std::max(0.0, price - link.cost.marginal(link.capacity));
  }
  out.utility = social_utility(s, out.allocation.x);
  out.residuals = kkt_residuals(s, out.allocation, out.duals);
  if (out.residuals.max() > tol::kKktResidual * std::max(1.0, top))
    throw ConvergenceError("system solver failed the KKT check", out.residuals.max());
  return out;
}

/// Single-link social optimum.
inline SystemSolution solve_system(const Scenario& s) {
  if (s.num_links() != 1) throw InputError("solve_system expects exactly one link");
  return solve_ml_system(s);
}

struct GridSolution {
  Allocation allocation;
  double utility = 0.0;
  /// Gap to the true optimum guaranteed by the grid resolution.
  double tolerance = 0.0;
  std::size_t points = 0;
};

/// Independent oracle: exhaustive search over the rate grid {0, h, 2h, ...}.
/// Per link the aggregate is capped by capacity and by v_l^{-1}(max U'(0)),
/// beyond which extra rate never pays.
inline GridSolution brute_force_system(const Scenario& s, double step,
                                       std::size_t budget = 10'000'000) {
  s.validate();
  if (!(step > 0.0)) throw InputError("grid step must be positive");
  const std::size_t M = s.num_users();
  const std::size_t L = s.num_links();
  const double top = s.max_marginal_at_zero();

  std::vector<long long> ticks(L);
  double lipschitz = top;
  double count = 1.0;
  for (std::size_t l = 0; l < L; ++l) {
    const CostSpec& cost = s.links[l].cost;
    double reach = 0.0;
    if (top > cost.marginal_at_zero())
      reach = (cost.is_polynomial() || top <= cost.breakpoints().back().marginal)
                  ? cost.marginal_inverse(top)
                  : cost.domain_end();
    reach = std::min(reach, s.links[l].capacity);
    ticks[l] = static_cast<long long>(std::floor(reach / step + 1e-9));
    lipschitz = std::max(lipschitz, top + cost.marginal(ticks[l] * step));
    // Number of nonnegative integer M-vectors with sum <= ticks: C(ticks + M, M).
    double c = 1.0;
    for (std::size_t k = 1; k <= M; ++k) c *= static_cast<double>(ticks[l] + k) / k;
    count *= c;
  }
  if (count > static_cast<double>(budget))
    throw CapabilityError("brute-force grid of " + std::to_string(count) +
                          " points exceeds the budget");

  GridSolution best;
  best.utility = -kInfinity;
  best.tolerance = lipschitz * step * static_cast<double>(M * L);
  Matrix x(M, L);
  std::vector<long long> used(L, 0);
  std::size_t visited = 0;

  std::function<void(std::size_t)> walk = [&](std::size_t idx) {
    if (idx == M * L) {
      ++visited;
      const double u = social_utility(s, x);
      if (u > best.utility) {
        best.utility = u;
        best.allocation = Allocation{x, x};
      }
      return;
    }
    const std::size_t l = idx / M;
    const std::size_t m = idx % M;
    for (long long k = 0; used[l] + k <= ticks[l]; ++k) {
      x(m, l) = k * step;
      used[l] += k;
      walk(idx + 1);
      used[l] -= k;
    }
    x(m, l) = 0.0;
  };
  walk(0);
  best.points = visited;
  return best;
}

}  // namespace dauction

#endif  // DAUCTION_SYSTEM_OPTIMUM_HPP
