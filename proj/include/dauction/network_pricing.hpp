#ifndef DAUCTION_NETWORK_PRICING_HPP
#define DAUCTION_NETWORK_PRICING_HPP

#include <cmath>
#include <span>
#include <vector>

#include "dauction/common.hpp"
#include "dauction/numeric.hpp"
#include "dauction/scenario.hpp"

namespace dauction {

/// User payments p and supplier signals beta, both M x L.
struct BidProfile {
  Matrix p;
  Matrix beta;

  static BidProfile zeros(std::size_t users, std::size_t links) {
    return {Matrix(users, links), Matrix(users, links)};
  }

  [[nodiscard]] double max_bid() const { return std::max(p.max_abs(), beta.max_abs()); }

  void validate() const {
    if (p.rows() != beta.rows() || p.cols() != beta.cols())
      throw InputError("bid matrices must have the same shape");
    for (double v : p.data())
      if (!(v >= 0.0) || !std::isfinite(v)) throw InputError("payments must be finite and >= 0");
    for (double v : beta.data())
      if (!(v >= 0.0) || !std::isfinite(v)) throw InputError("signals must be finite and >= 0");
  }
};

/// Prices chosen by the network manager. mu is +inf where a user pays
/// against a zero signal.
struct PriceProfile {
  std::vector<double> lambda;
  Matrix mu;
};

struct LinkPrices {
  double lambda = 0.0;
  std::vector<double> mu;
  bool capacity_binds = false;
};

struct LinkAllocation {
  std::vector<double> x;
  std::vector<double> y;
};

/// f(t) = sum_i 2 p_i / (t + sqrt(t^2 + 4 p_i / beta_i)). Terms with a zero
/// payment or a zero signal contribute nothing.
inline double eval_f(std::span<const double> p, std::span<const double> beta, double t) {
  double total = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] <= 0.0 || beta[i] <= 0.0) continue;
    total += 2.0 * p[i] / (t + std::sqrt(t * t + 4.0 * p[i] / beta[i]));
  }
  return total;
}

inline double matching_price(double lambda, double p, double beta) {
  if (p <= 0.0) return lambda;
  if (beta <= 0.0) return kInfinity;
  return 0.5 * (lambda + std::sqrt(lambda * lambda + 4.0 * p / beta));
}

/// Dual prices of the single-link network problem.
inline LinkPrices network_prices(std::span<const double> p, std::span<const double> beta,
                                 double capacity) {
  if (p.size() != beta.size()) throw InputError("p and beta must have equal length");
  LinkPrices out;
  const double at_zero = eval_f(p, beta, 0.0);
  if (std::isfinite(capacity) && at_zero > capacity) {
    out.capacity_binds = true;
    auto g = [&](double t) { return eval_f(p, beta, t) - capacity; };
    double hi = 1.0;
    while (g(hi) > 0.0) hi *= 2.0;
    const auto br = numeric::bisect_decreasing(g, 0.0, hi, 1e-16);
    out.lambda = 0.5 * (br.lo + br.hi);
    const double resid = std::abs(g(out.lambda));
    if (resid > tol::kFixedPointResidual * std::max(1.0, capacity))
      throw ConvergenceError("capacity price bisection did not meet f(lambda) = C", resid);
  }
  out.mu.resize(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) out.mu[i] = matching_price(out.lambda, p[i], beta[i]);
  return out;
}

/// Rates implied by the prices: x = p / mu and y = beta (mu - lambda).
inline LinkAllocation network_allocation(std::span<const double> p, std::span<const double> beta,
                                         const LinkPrices& prices) {
  LinkAllocation out;
  out.x.assign(p.size(), 0.0);
  out.y.assign(p.size(), 0.0);
  const double lambda = prices.lambda;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] <= 0.0 || beta[i] <= 0.0) continue;
    out.x[i] = p[i] / prices.mu[i];
    // mu - lambda without cancellation.
    const double ratio = p[i] / beta[i];
    const double gap = 2.0 * ratio / (lambda + std::sqrt(lambda * lambda + 4.0 * ratio));
    out.y[i] = beta[i] * gap;
  }
  return out;
}

/// The multi-link network problem decouples across links.
inline PriceProfile ml_network_prices(const BidProfile& bids, const Scenario& s) {
  bids.validate();
  const std::size_t M = bids.p.rows();
  const std::size_t L = bids.p.cols();
  if (M != s.num_users() || L != s.num_links())
    throw InputError("bid profile shape does not match the scenario");
  PriceProfile out{std::vector<double>(L, 0.0), Matrix(M, L)};
  for (std::size_t l = 0; l < L; ++l) {
    const auto p = bids.p.column(l);
    const auto b = bids.beta.column(l);
    const LinkPrices lp = network_prices(p, b, s.links[l].capacity);
    out.lambda[l] = lp.lambda;
    out.mu.set_column(l, lp.mu);
  }
  return out;
}

inline Allocation ml_network_allocation(const BidProfile& bids, const PriceProfile& prices) {
  const std::size_t M = bids.p.rows();
  const std::size_t L = bids.p.cols();
  Allocation out{Matrix(M, L), Matrix(M, L)};
  for (std::size_t l = 0; l < L; ++l) {
    LinkPrices lp{prices.lambda[l], prices.mu.column(l), prices.lambda[l] > 0.0};
    const auto la = network_allocation(bids.p.column(l), bids.beta.column(l), lp);
    out.x.set_column(l, la.x);
    out.y.set_column(l, la.y);
  }
  return out;
}

}  // namespace dauction

#endif  // DAUCTION_NETWORK_PRICING_HPP
