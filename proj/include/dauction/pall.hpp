#ifndef DAUCTION_PALL_HPP
#define DAUCTION_PALL_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "dauction/network_pricing.hpp"
#include "dauction/numeric.hpp"
#include "dauction/search_box.hpp"

namespace dauction {

// Link-as-leader mechanism on unbounded links. The supplier commits to
// signals first; every user then pays its best response, which the
// network manager serves at lambda = 0 and mu = sqrt(p / beta).

/// Follower rate r solving U'(r) = 2r / beta. Zero when beta = 0.
inline double fixed_point_rate(const PayoffSpec& u, double beta) {
  if (!(beta >= 0.0) || !std::isfinite(beta)) throw InputError("signal must be finite and >= 0");
  if (beta == 0.0) return 0.0;
  auto g = [&](double r) { return u.marginal(r) - 2.0 * r / beta; };
  const auto br = numeric::bisect_decreasing(g, 0.0, 0.5 * beta * u.marginal_at_zero(), 1e-16);
  return 0.5 * (br.lo + br.hi);
}

/// Best-response payments to a signal matrix. Each user spreads a total
/// rate r_m, from U'(r) = 2r / sum_k beta_mk, over links in proportion to
/// its signals: p_ml = beta_ml r_m^2 / (sum_k beta_mk)^2.
inline Matrix ml_pall_user_best_response(const Scenario& s, const Matrix& signals) {
  const std::size_t M = s.num_users();
  const std::size_t L = s.num_links();
  if (signals.rows() != M || signals.cols() != L) throw InputError("signal matrix shape mismatch");
  Matrix pay(M, L);
  for (std::size_t m = 0; m < M; ++m) {
    const double total = signals.row_sum(m);
    if (total <= 0.0) continue;
    const double r = fixed_point_rate(s.users[m], total);
    for (std::size_t l = 0; l < L; ++l) pay(m, l) = signals(m, l) * r * r / (total * total);
  }
  return pay;
}

inline std::vector<double> pall_user_best_response(const Scenario& s,
                                                   std::span<const double> signals) {
  if (s.num_links() != 1) throw InputError("single-link best response needs L = 1");
  Matrix b(signals.size(), 1);
  for (std::size_t m = 0; m < signals.size(); ++m) b(m, 0) = signals[m];
  return ml_pall_user_best_response(s, b).column(0);
}

/// Rates served when users follow `signals`: x_ml = beta_ml r_m / sum_k beta_mk.
inline Matrix pall_follower_rates(const Scenario& s, const Matrix& signals) {
  Matrix x(s.num_users(), s.num_links());
  for (std::size_t m = 0; m < s.num_users(); ++m) {
    const double total = signals.row_sum(m);
    if (total <= 0.0) continue;
    const double r = fixed_point_rate(s.users[m], total);
    for (std::size_t l = 0; l < s.num_links(); ++l) x(m, l) = signals(m, l) * r / total;
  }
  return x;
}

/// Supplier objective -V_l(sum_m x_ml) + sum_m p_ml under follower responses.
inline double ml_stackelberg_link_objective(const Scenario& s, const Matrix& signals,
                                            std::size_t l) {
  const Matrix pay = ml_pall_user_best_response(s, signals);
  const Matrix x = pall_follower_rates(s, signals);
  return -s.links.at(l).cost.value(x.column_sum(l)) + pay.column_sum(l);
}

/// Single-link form -V(sum r_m) + sum r_m^2 / beta_m.
inline double stackelberg_link_objective(const Scenario& s, std::span<const double> signals) {
  if (s.num_links() != 1) throw InputError("single-link objective needs L = 1");
  double served = 0.0;
  double revenue = 0.0;
  for (std::size_t m = 0; m < signals.size(); ++m) {
    if (signals[m] <= 0.0) continue;
    const double r = fixed_point_rate(s.users.at(m), signals[m]);
    served += r;
    revenue += r * r / signals[m];
  }
  return -s.links[0].cost.value(served) + revenue;
}

struct Incumbent {
  Matrix signals;
  /// Supplier objective, summed over links.
  double objective = 0.0;
};

struct StackelbergEquilibrium {
  Matrix beta_star;
  Matrix p_star;
  Allocation allocation;
  std::vector<double> link_payoffs;
  std::vector<double> user_payoffs;
  double utility = 0.0;
  /// Distinct near-optimal signal vectors met by the search.
  std::vector<Incumbent> incumbents;
  /// Largest projected partial derivative of the supplier objective.
  double stationarity = 0.0;
  bool closed_form = false;
};

namespace detail {

inline StackelbergEquilibrium assemble(const Scenario& s, Matrix signals, bool closed_form) {
  StackelbergEquilibrium eq;
  eq.closed_form = closed_form;
  eq.p_star = ml_pall_user_best_response(s, signals);
  eq.allocation.x = pall_follower_rates(s, signals);
  eq.allocation.y = eq.allocation.x;
  eq.beta_star = std::move(signals);
  for (std::size_t l = 0; l < s.num_links(); ++l)
    eq.link_payoffs.push_back(-s.links[l].cost.value(eq.allocation.x.column_sum(l)) +
                              eq.p_star.column_sum(l));
  for (std::size_t m = 0; m < s.num_users(); ++m)
    eq.user_payoffs.push_back(s.users[m].value(eq.allocation.x.row_sum(m)) - eq.p_star.row_sum(m));
  eq.utility = social_utility(s, eq.allocation.x);
  if (closed_form) {
    double total = 0.0;
    for (double v : eq.link_payoffs) total += v;
    eq.incumbents.push_back({eq.beta_star, total});
  }
  return eq;
}

inline void require_unbounded(const Scenario& s) {
  s.validate();
  if (!s.all_unbounded())
    throw CapabilityError(
        "link-as-leader mechanism is defined for unbounded capacity only; "
        "remove the capacity limit or use ptm");
}

inline std::size_t top_linear_user(const Scenario& s) {
  if (!s.all_linear()) throw CapabilityError("closed form requires every pay-off to be linear");
  std::size_t winner = 0;
  for (std::size_t m = 1; m < s.num_users(); ++m)
    if (s.users[m].parameter() > s.users[winner].parameter()) winner = m;
  return winner;
}

// Projected finite-difference gradient of link l's objective in its column.
inline double projected_gradient(const Scenario& s, const Matrix& signals, std::size_t l) {
  double worst = 0.0;
  for (std::size_t m = 0; m < s.num_users(); ++m) {
    const double b = signals(m, l);
    const double h = 1e-6 * std::max(1.0, b);
    Matrix up = signals;
    up(m, l) = b + h;
    const double base = ml_stackelberg_link_objective(s, signals, l);
    const double forward = (ml_stackelberg_link_objective(s, up, l) - base) / h;
    if (b <= h) {
      worst = std::max(worst, std::max(0.0, forward));
      continue;
    }
    Matrix down = signals;
    down(m, l) = b - h;
    const double backward = (base - ml_stackelberg_link_objective(s, down, l)) / h;
    worst = std::max(worst, std::abs(0.5 * (forward + backward)));
  }
  return worst;
}

// Maximises g on [0, hi]: coarse log grid, golden section around the best
// grid point, and the zero endpoint.
template <typename G>
std::pair<double, double> line_maximise(G&& g, double hi, int grid_points = 24) {
  const auto grid = numeric::log_space(hi * 1e-9, hi, grid_points);
  std::size_t best = 0;
  double best_val = -kInfinity;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double v = g(grid[i]);
    if (v > best_val) {
      best_val = v;
      best = i;
    }
  }
  const double a = best > 0 ? grid[best - 1] : 0.0;
  const double b = best + 1 < grid.size() ? grid[best + 1] : grid[best];
  auto refined = numeric::golden_section_max(g, a, b, 1e-13 * std::max(1.0, b));
  if (best_val > refined.second) refined = {grid[best], best_val};
  const double at_zero = g(0.0);
  if (at_zero >= refined.second) return {0.0, at_zero};
  return refined;
}

}  // namespace detail

/// Closed-form leader signal for linear pay-offs on one link: the user with
/// the largest slope c gets beta = (2/c) v^{-1}(c/2) and everyone else zero.
/// Ties go to the lowest index.
inline StackelbergEquilibrium pall_linear_closed_form(const Scenario& s) {
  if (s.num_links() != 1) throw InputError("single-link closed form needs L = 1");
  detail::require_unbounded(s);
  const std::size_t winner = detail::top_linear_user(s);
  const double c = s.users[winner].parameter();
  Matrix signals(s.num_users(), 1);
  signals(winner, 0) = (2.0 / c) * s.links[0].cost.marginal_inverse(0.5 * c);
  return detail::assemble(s, std::move(signals), true);
}

/// Per-link closed form. The winner receives (2/c) v_l^{-1}(c/2) on every
/// link and a total rate of sum_l v_l^{-1}(c/2).
inline StackelbergEquilibrium ml_pall_linear_closed_form(const Scenario& s) {
  detail::require_unbounded(s);
  const std::size_t winner = detail::top_linear_user(s);
  const double c = s.users[winner].parameter();
  Matrix signals(s.num_users(), s.num_links());
  for (std::size_t l = 0; l < s.num_links(); ++l)
    signals(winner, l) = (2.0 / c) * s.links[l].cost.marginal_inverse(0.5 * c);
  return detail::assemble(s, std::move(signals), true);
}

struct StackelbergSearchOptions {
  int starts = 16;
  std::uint64_t seed = 0;
  int max_sweeps = 200;
  /// Sweeps stop once a full pass improves the objective by less than this.
  double improvement_tol = 1e-15;
  /// Accept pay-offs or costs without the growth conditions that make the
  /// search box provably sufficient.
  bool allow_unflagged = false;
};

/// Numeric leader optimisation on one unbounded link.
///
/// Multistart coordinate ascent over the search box: each coordinate gets a
/// line search on [0, signal bound]. Starts are the zero vector, the box
/// midpoint and seeded uniform draws. Every start that ends within a relative
/// 1e-9 of the best objective but at a different signal vector is kept as a
/// distinct incumbent.
inline StackelbergEquilibrium pall_link_optimize(const Scenario& s,
                                                 const StackelbergSearchOptions& options = {}) {
  if (s.num_links() != 1) throw InputError("numeric leader search supports L = 1");
  detail::require_unbounded(s);
  if (options.starts < 1) throw InputError("starts must be >= 1");
  if (!options.allow_unflagged) {
    for (std::size_t m = 0; m < s.num_users(); ++m)
      if (!s.users[m].has_unbounded_revenue_growth())
        throw CapabilityError("user " + std::to_string(m) + " (" + s.users[m].describe() +
                              ") lacks unbounded x U'(x); leader optimum not guaranteed");
    if (!s.links[0].cost.has_superlinear_growth())
      throw CapabilityError("link cost lacks superlinear growth; leader optimum not guaranteed");
  }

  const std::size_t M = s.num_users();
  const SearchBox box = search_box(s, 0);
  std::mt19937_64 rng(options.seed);

  std::vector<Incumbent> finals;
  for (int start = 0; start < options.starts; ++start) {
    Matrix signals(M, 1);
    for (std::size_t m = 0; m < M; ++m) {
      if (start == 1) signals(m, 0) = 0.5 * box.signal[m];
      if (start >= 2) signals(m, 0) = std::uniform_real_distribution<double>(0.0, box.signal[m])(rng);
    }
    double value = ml_stackelberg_link_objective(s, signals, 0);
    for (int sweep = 0; sweep < options.max_sweeps; ++sweep) {
      const double before = value;
      for (std::size_t m = 0; m < M; ++m) {
        Matrix trial = signals;
        auto g = [&](double b) {
          trial(m, 0) = b;
          return ml_stackelberg_link_objective(s, trial, 0);
        };
        const auto [b, v] = detail::line_maximise(g, box.signal[m]);
        if (v > value) {
          signals(m, 0) = b;
          value = v;
        }
      }
      if (value - before <= options.improvement_tol * std::max(1.0, std::abs(value))) break;
    }
    finals.push_back({signals, value});
  }

  std::size_t best = 0;
  for (std::size_t i = 1; i < finals.size(); ++i)
    if (finals[i].objective > finals[best].objective) best = i;

  StackelbergEquilibrium eq = detail::assemble(s, finals[best].signals, false);
  const double band = 1e-9 * std::max(1.0, std::abs(finals[best].objective));
  for (const auto& f : finals) {
    if (finals[best].objective - f.objective > band) continue;
    bool seen = false;
    for (const auto& kept : eq.incumbents)
      if (max_abs_difference(kept.signals, f.signals) <= 1e-6) seen = true;
    if (!seen) eq.incumbents.push_back(f);
  }
  eq.stationarity = detail::projected_gradient(s, eq.beta_star, 0);
  return eq;
}

struct StackelbergCheck {
  /// Worst |U'(sqrt(p beta)) sqrt(beta) / (2 sqrt(p)) - 1| over beta > 0.
  double user_foc = 0.0;
  /// Largest gain of a sampled unilateral signal change on any link.
  double link_gain = 0.0;
  std::size_t deviations_checked = 0;
  bool valid = false;
};

/// Checks follower optimality and samples single-coordinate and
/// drop-to-zero deviations of every link against re-solved follower bids.
/// A link gain must stay below `tolerance * max(1, |S_l|)`.
inline StackelbergCheck verify_stackelberg(const StackelbergEquilibrium& eq, const Scenario& s,
                                           int samples = 64,
                                           double tolerance = tol::kVerification) {
  StackelbergCheck check;
  const std::size_t M = s.num_users();
  const std::size_t L = s.num_links();
  for (std::size_t m = 0; m < M; ++m) {
    const double total_beta = eq.beta_star.row_sum(m);
    const double total_pay = eq.p_star.row_sum(m);
    if (total_beta <= 0.0) {
      check.user_foc = std::max(check.user_foc, total_pay);
      continue;
    }
    const double r = std::sqrt(total_pay * total_beta);
    const double foc = s.users[m].marginal(r) * std::sqrt(total_beta) / (2.0 * std::sqrt(total_pay));
    check.user_foc = std::max(check.user_foc, std::abs(foc - 1.0));
  }

  bool links_ok = true;
  for (std::size_t l = 0; l < L; ++l) {
    const SearchBox box = search_box(s, l);
    const double base = ml_stackelberg_link_objective(s, eq.beta_star, l);
    const double allowed = tolerance * std::max(1.0, std::abs(base));
    double worst = -kInfinity;
    for (std::size_t m = 0; m < M; ++m) {
      const double upper = std::max(box.signal[m], 2.0 * eq.beta_star(m, l));
      auto grid = numeric::log_space(1e-9 * upper, upper, samples);
      grid.push_back(0.0);
      Matrix trial = eq.beta_star;
      for (double b : grid) {
        trial(m, l) = b;
        worst = std::max(worst, ml_stackelberg_link_objective(s, trial, l) - base);
        ++check.deviations_checked;
      }
    }
    Matrix zeroed = eq.beta_star;
    for (std::size_t m = 0; m < M; ++m) zeroed(m, l) = 0.0;
    worst = std::max(worst, ml_stackelberg_link_objective(s, zeroed, l) - base);
    ++check.deviations_checked;
    check.link_gain = std::max(check.link_gain, worst);
    if (worst > allowed) links_ok = false;
  }
  check.valid = links_ok && check.user_foc <= tolerance;
  return check;
}

}  // namespace dauction

#endif  // DAUCTION_PALL_HPP
