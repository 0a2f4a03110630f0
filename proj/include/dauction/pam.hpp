#ifndef DAUCTION_PAM_HPP
#define DAUCTION_PAM_HPP

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "dauction/network_pricing.hpp"
#include "dauction/numeric.hpp"
#include "dauction/search_box.hpp"

namespace dauction {

// Price-anticipating pay-offs. Agents bid simultaneously and the network
// manager answers with the dual prices of the network problem.

/// Q_m = U_m(sum_l p_ml / mu_ml) - sum_l p_ml. A payment against a zero
/// signal buys nothing but is still charged.
inline double pam_user_payoff(std::size_t m, const BidProfile& bids, const Scenario& s) {
  const PriceProfile prices = ml_network_prices(bids, s);
  const Allocation a = ml_network_allocation(bids, prices);
  return s.users.at(m).value(a.x.row_sum(m)) - bids.p.row_sum(m);
}

/// Link pay-off of the price-anticipating game.
///   sum_i sqrt(p_i beta_i) <= C:  -V(sum_i sqrt(p_i beta_i)) + sum_i p_i
///   otherwise:                    -V(C) + sum_i x_i^2 / beta_i
/// A payment against a zero signal enters at its limit p_i in both branches.
inline double pam_link_payoff(std::size_t l, const BidProfile& bids, const Scenario& s) {
  bids.validate();
  const auto p = bids.p.column(l);
  const auto beta = bids.beta.column(l);
  const Link& link = s.links.at(l);
  double at_zero = 0.0;
  double collected = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    at_zero += std::sqrt(p[i] * beta[i]);
    collected += p[i];
  }
  if (!link.bounded() || at_zero <= link.capacity) return -link.cost.value(at_zero) + collected;

  const LinkPrices prices = network_prices(p, beta, link.capacity);
  const LinkAllocation a = network_allocation(p, beta, prices);
  double revenue = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i)
    revenue += beta[i] > 0.0 ? a.x[i] * a.x[i] / beta[i] : p[i];
  return -link.cost.value(link.capacity) + revenue;
}

inline double pam_link_payoff(const BidProfile& bids, const Scenario& s) {
  return pam_link_payoff(0, bids, s);
}

struct Deviation {
  enum class Agent { User, Link };
  Agent agent = Agent::User;
  std::size_t agent_index = 0;
  /// Link index for a user deviation, user index for a link deviation.
  std::size_t coordinate = 0;
  /// The link dropped its whole signal vector on this link.
  bool zeroed_vector = false;
  double from = 0.0;
  double to = 0.0;
  double gain = 0.0;

  [[nodiscard]] std::string describe() const {
    std::string who = agent == Agent::User ? "user " : "link ";
    who += std::to_string(agent_index);
    if (zeroed_vector) return who + " zeroes every signal (gain " + std::to_string(gain) + ")";
    return who + (agent == Agent::User ? " payment on link " : " signal to user ") +
           std::to_string(coordinate) + ": " + std::to_string(from) + " -> " +
           std::to_string(to) + " (gain " + std::to_string(gain) + ")";
  }
};

struct NashReport {
  bool certified = false;
  std::optional<Deviation> improving;
  double max_gain = 0.0;
  std::size_t deviations_checked = 0;
};

namespace detail {

// Sampled deviation grid: zero, log-spaced points and any extra candidates.
inline std::vector<double> deviation_grid(double upper, int samples,
                                          std::initializer_list<double> extra = {}) {
  std::vector<double> grid = numeric::log_space(1e-9, std::max(upper, 1e-8), samples);
  grid.push_back(0.0);
  for (double e : extra)
    if (std::isfinite(e) && e >= 0.0) grid.push_back(e);
  return grid;
}

// Maximiser of h(q) = U(sqrt(q beta)) - q, from U'(r) = 2r / beta.
inline double isolated_best_payment(const PayoffSpec& u, double beta) {
  if (beta <= 0.0) return 0.0;
  auto g = [&](double r) { return u.marginal(r) - 2.0 * r / beta; };
  const auto br = numeric::bisect_decreasing(g, 0.0, 0.5 * beta * u.marginal_at_zero());
  const double r = br.lo;
  return r * r / beta;
}

}  // namespace detail

/// Searches sampled unilateral deviations of every agent.
///
/// The zero profile is certified when no deviation gains more than
/// `gain_tolerance`. For any other profile the search reports the best
/// improving deviation found. Each user coordinate is probed on a log grid
/// plus zero and the isolated best response min(C^2 / beta, q); each link
/// coordinate on a log grid plus zero, and every link also tries dropping
/// all its signals at once.
inline NashReport verify_pam_nash(const BidProfile& bids, const Scenario& s,
                                  int deviation_samples = 64,
                                  double gain_tolerance = tol::kDeviationGain) {
  if (deviation_samples < 1) throw InputError("deviation_samples must be >= 1");
  bids.validate();
  const std::size_t M = s.num_users();
  const std::size_t L = s.num_links();
  NashReport report;
  report.max_gain = -kInfinity;

  auto consider = [&](Deviation d) {
    ++report.deviations_checked;
    if (d.gain > report.max_gain) report.max_gain = d.gain;
    if (d.gain > gain_tolerance && (!report.improving || d.gain > report.improving->gain))
      report.improving = d;
  };

  for (std::size_t l = 0; l < L; ++l) {
    const SearchBox box = search_box(s, l);
    const double pay_upper = std::max(1.0, box.payment);
    double signal_upper = 1.0;
    for (double b : box.signal) signal_upper = std::max(signal_upper, b);

    for (std::size_t m = 0; m < M; ++m) {
      const double base = pam_user_payoff(m, bids, s);
      const double beta = bids.beta(m, l);
      double target = detail::isolated_best_payment(s.users[m], beta);
      if (s.links[l].bounded() && beta > 0.0)
        target = std::min(target, s.links[l].capacity * s.links[l].capacity / beta);
      BidProfile trial = bids;
      for (double q : detail::deviation_grid(pay_upper, deviation_samples, {target})) {
        trial.p(m, l) = q;
        consider({Deviation::Agent::User, m, l, false, bids.p(m, l), q,
                  pam_user_payoff(m, trial, s) - base});
      }
    }

    const double base = pam_link_payoff(l, bids, s);
    BidProfile trial = bids;
    for (std::size_t m = 0; m < M; ++m) {
      for (double b : detail::deviation_grid(signal_upper, deviation_samples)) {
        trial.beta(m, l) = b;
        consider({Deviation::Agent::Link, l, m, false, bids.beta(m, l), b,
                  pam_link_payoff(l, trial, s) - base});
      }
      trial.beta(m, l) = bids.beta(m, l);
    }
    for (std::size_t m = 0; m < M; ++m) trial.beta(m, l) = 0.0;
    consider({Deviation::Agent::Link, l, 0, true, 0.0, 0.0, pam_link_payoff(l, trial, s) - base});
  }
  report.certified = !report.improving.has_value();
  return report;
}

struct DynamicsStep {
  int round = 0;
  BidProfile bids;
  double utility = 0.0;
  std::vector<double> user_payoffs;
  std::vector<double> link_payoffs;
  double max_bid = 0.0;
};

namespace detail {

inline DynamicsStep snapshot(int round, const BidProfile& bids, const Scenario& s) {
  DynamicsStep step;
  step.round = round;
  step.bids = bids;
  const Allocation a = ml_network_allocation(bids, ml_network_prices(bids, s));
  step.utility = social_utility(s, a.x);
  for (std::size_t m = 0; m < s.num_users(); ++m)
    step.user_payoffs.push_back(pam_user_payoff(m, bids, s));
  for (std::size_t l = 0; l < s.num_links(); ++l)
    step.link_payoffs.push_back(pam_link_payoff(l, bids, s));
  step.max_bid = bids.max_bid();
  return step;
}

// Best payment of user m on link l with everything else held fixed.
inline double user_best_payment(std::size_t m, std::size_t l, const BidProfile& bids,
                                const Scenario& s) {
  if (bids.beta(m, l) <= 0.0) return 0.0;
  BidProfile trial = bids;
  auto payoff = [&](double q) {
    trial.p(m, l) = q;
    return pam_user_payoff(m, trial, s);
  };
  const double upper = std::max(1.0, search_box(s, l).payment);
  const auto grid = numeric::log_space(1e-12, upper, 96);
  std::size_t best = 0;
  double best_val = -kInfinity;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double v = payoff(grid[i]);
    if (v > best_val) {
      best_val = v;
      best = i;
    }
  }
  const double a = best > 0 ? grid[best - 1] : 0.0;
  const double b = best + 1 < grid.size() ? grid[best + 1] : grid[best];
  auto [q, val] = numeric::golden_section_max(payoff, a, b, 1e-14 * std::max(1.0, b));
  return payoff(0.0) >= val ? 0.0 : q;
}

}  // namespace detail

/// Alternating best responses. Each round the users answer the current
/// signals, then every link answers the new payments. The link's answer is
/// always the zero signal: it keeps the whole collected payment and supplies
/// nothing, so it can never do better, and against a zero signal the users'
/// answer is to pay nothing.
inline std::vector<DynamicsStep> pam_best_response_dynamics(const Scenario& s,
                                                            const BidProfile& initial,
                                                            int rounds) {
  if (rounds < 1) throw InputError("rounds must be >= 1");
  initial.validate();
  const std::size_t M = s.num_users();
  const std::size_t L = s.num_links();
  std::vector<DynamicsStep> trajectory{detail::snapshot(0, initial, s)};
  BidProfile bids = initial;
  for (int round = 1; round <= rounds; ++round) {
    BidProfile next = bids;
    for (std::size_t m = 0; m < M; ++m)
      for (std::size_t l = 0; l < L; ++l) next.p(m, l) = detail::user_best_payment(m, l, bids, s);
    bids.p = next.p;
    for (std::size_t l = 0; l < L; ++l)
      for (std::size_t m = 0; m < M; ++m) bids.beta(m, l) = 0.0;
    trajectory.push_back(detail::snapshot(round, bids, s));
  }
  return trajectory;
}

}  // namespace dauction

#endif  // DAUCTION_PAM_HPP
