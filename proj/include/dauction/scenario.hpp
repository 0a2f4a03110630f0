#ifndef DAUCTION_SCENARIO_HPP
#define DAUCTION_SCENARIO_HPP

#include <cstdint>
#include <optional>
#include <vector>

#include "dauction/common.hpp"
#include "dauction/payoff_models.hpp"

namespace dauction {

struct Link {
  CostSpec cost;
  double capacity = kInfinity;  // kInfinity encodes an unbounded link

  [[nodiscard]] bool bounded() const noexcept { return std::isfinite(capacity); }
  friend bool operator==(const Link&, const Link&) = default;
};

/// One market instance: M users buying rate from L parallel links.
struct Scenario {
  std::vector<PayoffSpec> users;
  std::vector<Link> links;
  std::optional<std::uint64_t> seed;

  [[nodiscard]] std::size_t num_users() const noexcept { return users.size(); }
  [[nodiscard]] std::size_t num_links() const noexcept { return links.size(); }

  [[nodiscard]] bool all_linear() const {
    for (const auto& u : users)
      if (!u.is_linear()) return false;
    return true;
  }

  [[nodiscard]] bool all_unbounded() const {
    for (const auto& l : links)
      if (l.bounded()) return false;
    return true;
  }

  [[nodiscard]] double max_marginal_at_zero() const {
    double m = 0.0;
    for (const auto& u : users) m = std::max(m, u.marginal_at_zero());
    return m;
  }

  void validate() const {
    if (users.empty()) throw InputError("scenario needs at least one user");
    if (links.empty()) throw InputError("scenario needs at least one link");
    for (const auto& l : links)
      if (!(l.capacity >= 0.0)) throw InputError("link capacity must be nonnegative");
  }

  friend bool operator==(const Scenario&, const Scenario&) = default;
};

/// Rate requests x and rate allocations y, both M x L.
struct Allocation {
  Matrix x;
  Matrix y;
};

/// Capacity prices (one per link) and matching prices (one per user-link pair).
struct DualPrices {
  std::vector<double> lambda;
  Matrix mu;
};

inline Scenario single_link_scenario(std::vector<PayoffSpec> users, CostSpec cost,
                                     double capacity = kInfinity) {
  Scenario s;
  s.users = std::move(users);
  s.links.push_back(Link{std::move(cost), capacity});
  return s;
}

/// Sum_m U_m(sum_l x_ml) - sum_l V_l(sum_m x_ml).
inline double social_utility(const Scenario& s, const Matrix& x) {
  double total = 0.0;
  for (std::size_t m = 0; m < s.num_users(); ++m) total += s.users[m].value(x.row_sum(m));
  for (std::size_t l = 0; l < s.num_links(); ++l) total -= s.links[l].cost.value(x.column_sum(l));
  return total;
}

}  // namespace dauction

#endif  // DAUCTION_SCENARIO_HPP
