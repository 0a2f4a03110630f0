// Two linear users on one quadratic link: social optimum, competitive
// equilibrium, the zero Nash profile and the link-as-leader outcome.

#include <cstdio>

#include "dauction/dauction.hpp"

int main() {
  using namespace dauction;
  const Scenario s =
      single_link_scenario({PayoffSpec::linear(4.0), PayoffSpec::linear(1.0)}, CostSpec::polynomial(1.0, 2));

  const SystemSolution opt = solve_system(s);
  std::printf("social optimum: x = (%.4f, %.4f), utility %.4f, price %.4f\n", opt.allocation.x(0, 0),
              opt.allocation.x(1, 0), opt.utility, opt.price);

  const CompetitiveEquilibrium ce = construct_competitive_equilibrium(s);
  std::printf("price-taking: p = (%.4f, %.4f), beta = (%.4f, %.4f), worst residual %.2e\n",
              ce.bids.p(0, 0), ce.bids.p(1, 0), ce.bids.beta(0, 0), ce.bids.beta(1, 0),
              ce.report.max());

  const NashReport nash = verify_pam_nash(BidProfile::zeros(2, 1), s);
  std::printf("price-anticipating: zero profile certified = %s (%zu deviations)\n",
              nash.certified ? "yes" : "no", nash.deviations_checked);

  const StackelbergEquilibrium leader = pall_linear_closed_form(s);
  const EfficiencyResult eff = efficiency(s, leader.allocation.x);
  std::printf("link as leader: beta* = (%.4f, %.4f), utility %.4f, efficiency %.4f\n",
              leader.beta_star(0, 0), leader.beta_star(1, 0), leader.utility, eff.ratio);
  return 0;
}
