#include <gtest/gtest.h>

#include <random>

#include "dauction/ptm.hpp"

using namespace dauction;

TEST(CompetitiveEquilibrium, InteriorExample) {
  const auto s =
      single_link_scenario({PayoffSpec::linear(4.0)}, CostSpec::polynomial(1.0, 2), 10.0);
  const auto ce = construct_competitive_equilibrium(s);
  EXPECT_NEAR(ce.bids.p(0, 0), 8.0, 1e-9);
  EXPECT_NEAR(ce.bids.beta(0, 0), 0.5, 1e-9);
  EXPECT_NEAR(ce.prices.lambda[0], 0.0, 1e-12);
  EXPECT_NEAR(ce.prices.mu(0, 0), 4.0, 1e-9);
  EXPECT_NEAR(ce.allocation.x(0, 0), 2.0, 1e-9);
  EXPECT_TRUE(ce.report.valid());
  EXPECT_LT(ce.report.max(), 1e-8);
}

TEST(CompetitiveEquilibrium, CapacityBindingExample) {
  const auto s =
      single_link_scenario({PayoffSpec::linear(4.0)}, CostSpec::polynomial(1.0, 2), 1.0);
  const auto ce = construct_competitive_equilibrium(s);
  EXPECT_NEAR(ce.bids.p(0, 0), 4.0, 1e-9);
  EXPECT_NEAR(ce.prices.lambda[0], 2.0, 1e-9);
  EXPECT_NEAR(ce.bids.beta(0, 0), 0.5, 1e-9);
  EXPECT_NEAR(ce.c_hat[0], std::sqrt(4.0 * 0.5), 1e-9);
  EXPECT_TRUE(ce.report.valid());
}

TEST(CompetitiveEquilibrium, ZeroCapacityIsTriviallyValid) {
  const auto s = single_link_scenario({PayoffSpec::linear(4.0), PayoffSpec::shifted_log(1.0)},
                                      CostSpec::polynomial(1.0, 2), 0.0);
  const auto ce = construct_competitive_equilibrium(s);
  EXPECT_EQ(ce.bids.p.max_abs(), 0.0);
  EXPECT_EQ(ce.bids.beta.max_abs(), 0.0);
  EXPECT_TRUE(ce.report.valid());
  // Zero bids priced at the top marginal pay-off, with the capacity price
  // absorbing all of it: nobody wants to buy and the link cannot sell.
  const auto zero = BidProfile::zeros(2, 1);
  const PriceProfile priced{{4.0}, Matrix(2, 1, 4.0)};
  EXPECT_TRUE(verify_competitive_equilibrium(zero, priced, s).valid());
  // At a zero price a linear user would demand rate, so C1 objects.
  const PriceProfile free{{0.0}, Matrix(2, 1)};
  EXPECT_GT(verify_competitive_equilibrium(zero, free, s).residuals.at("C1"), 1.0);
}

TEST(CompetitiveEquilibrium, PerturbedPaymentBreaksUserCondition) {
  const auto s = single_link_scenario({PayoffSpec::shifted_log(6.0), PayoffSpec::shifted_log(3.0)},
                                      CostSpec::polynomial(1.0, 2), 10.0);
  auto ce = construct_competitive_equilibrium(s);
  ASSERT_TRUE(ce.report.valid());
  ce.bids.p(0, 0) *= 1.1;
  const auto report = verify_competitive_equilibrium(ce, s);
  EXPECT_GT(report.residuals.at("C1"), 1e-3);
  EXPECT_FALSE(report.valid());
}

TEST(CompetitiveEquilibrium, ReportsEveryCondition) {
  const auto s =
      single_link_scenario({PayoffSpec::linear(4.0)}, CostSpec::polynomial(1.0, 2), 1.0);
  const auto report = construct_competitive_equilibrium(s).report;
  for (const char* key : {"C1", "C2", "C3-a", "C3-b", "C3-c"}) EXPECT_TRUE(report.residuals.count(key)) << key;
}

TEST(CompetitiveEquilibrium, RandomScenariosImplementTheOptimum) {
  std::mt19937_64 rng(5);
  auto uniform = [&](double a, double b) { return std::uniform_real_distribution<double>(a, b)(rng); };
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<PayoffSpec> users;
    const int M = 1 + trial % 4;
    for (int m = 0; m < M; ++m)
      users.push_back(uniform(0, 1) < 0.5 ? PayoffSpec::linear(uniform(0.2, 10.0))
                                          : PayoffSpec::shifted_log(uniform(0.2, 10.0)));
    const double capacity = uniform(0, 1) < 0.3 ? kInfinity : uniform(0.05, 5.0);
    const auto s = single_link_scenario(users, CostSpec::polynomial(uniform(0.1, 5.0), 2 + trial % 3),
                                        capacity);
    const auto ce = construct_competitive_equilibrium(s);
    const auto opt = solve_system(s);
    EXPECT_LT(max_abs_difference(ce.allocation.x, opt.allocation.x), 1e-8) << "trial " << trial;
    EXPECT_LT(ce.report.max(), 1e-8) << "trial " << trial;
  }
}
