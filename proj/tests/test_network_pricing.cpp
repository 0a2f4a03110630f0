#include <gtest/gtest.h>

#include <random>

#include "dauction/network_pricing.hpp"
#include "oracles.hpp"

using namespace dauction;

TEST(EvalF, HandValues) {
  const std::vector<double> one{1.0};
  EXPECT_DOUBLE_EQ(eval_f(one, one, 0.0), 1.0);
  const std::vector<double> four{4.0};
  EXPECT_NEAR(eval_f(four, four, 3.75), 1.0, 1e-15);
  const std::vector<double> zero{0.0, 0.0};
  const std::vector<double> betas{1.0, 5.0};
  EXPECT_EQ(eval_f(zero, betas, 0.0), 0.0);
  EXPECT_EQ(eval_f(zero, betas, 7.0), 0.0);
}

TEST(NetworkPrices, NonBindingBranch) {
  const std::vector<double> one{1.0};
  const auto prices = network_prices(one, one, 2.0);
  EXPECT_EQ(prices.lambda, 0.0);
  EXPECT_NEAR(prices.mu[0], 1.0, 1e-15);
  EXPECT_FALSE(prices.capacity_binds);
  const auto a = network_allocation(one, one, prices);
  EXPECT_NEAR(a.x[0], 1.0, 1e-15);
  EXPECT_NEAR(a.y[0], 1.0, 1e-15);
}

TEST(NetworkPrices, BindingBranchMatchesOracle) {
  const std::vector<double> four{4.0};
  const auto prices = network_prices(four, four, 1.0);
  EXPECT_NEAR(prices.lambda, 3.75, 1e-12);
  EXPECT_NEAR(prices.lambda, oracle::capacity_price({4.0}, {4.0}, 1.0), 1e-12);
  EXPECT_NEAR(prices.mu[0], 4.0, 1e-12);
  const auto a = network_allocation(four, four, prices);
  EXPECT_NEAR(a.x[0], 1.0, 1e-12);
  EXPECT_NEAR(a.y[0], 1.0, 1e-12);
}

TEST(NetworkPrices, ZeroPaymentsAndZeroSignals) {
  const std::vector<double> p{0.0, 0.0, 2.0};
  const std::vector<double> beta{1.0, 0.0, 0.0};
  const auto prices = network_prices(p, beta, 1.0);
  EXPECT_EQ(prices.lambda, 0.0);
  EXPECT_EQ(prices.mu[0], 0.0);
  EXPECT_EQ(prices.mu[1], 0.0);
  EXPECT_TRUE(std::isinf(prices.mu[2]));
  const auto a = network_allocation(p, beta, prices);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(a.x[i], 0.0);
    EXPECT_EQ(a.y[i], 0.0);
  }
}

TEST(NetworkPrices, UnboundedCapacityNeverPrices) {
  const std::vector<double> p{100.0, 3.0};
  const std::vector<double> beta{50.0, 9.0};
  EXPECT_EQ(network_prices(p, beta, kInfinity).lambda, 0.0);
}

TEST(MlNetwork, DecouplesAcrossLinks) {
  Scenario s = single_link_scenario({PayoffSpec::linear(1.0), PayoffSpec::linear(2.0)},
                                    CostSpec::polynomial(1.0, 2), 1.0);
  s.links.push_back(Link{CostSpec::polynomial(1.0, 2), 6.0});
  s.links.push_back(Link{CostSpec::polynomial(1.0, 2), 1.0});
  BidProfile bids = BidProfile::zeros(2, 3);
  const double p[2] = {4.0, 1.0};
  const double b[2] = {4.0, 2.0};
  for (std::size_t m = 0; m < 2; ++m) {
    bids.p(m, 0) = bids.p(m, 1) = p[m];
    bids.beta(m, 0) = bids.beta(m, 1) = b[m];
  }
  const auto prices = ml_network_prices(bids, s);
  const auto a = ml_network_allocation(bids, prices);
  const std::vector<double> pv{4.0, 1.0};
  const std::vector<double> bv{4.0, 2.0};
  const auto binding = network_prices(pv, bv, 1.0);
  const auto loose = network_prices(pv, bv, 6.0);
  EXPECT_GT(binding.lambda, 0.0);
  EXPECT_EQ(loose.lambda, 0.0);
  EXPECT_DOUBLE_EQ(prices.lambda[0], binding.lambda);
  EXPECT_DOUBLE_EQ(prices.lambda[1], loose.lambda);
  EXPECT_EQ(prices.lambda[2], 0.0);
  for (std::size_t m = 0; m < 2; ++m) {
    EXPECT_DOUBLE_EQ(prices.mu(m, 0), binding.mu[m]);
    EXPECT_DOUBLE_EQ(prices.mu(m, 1), loose.mu[m]);
    EXPECT_EQ(a.x(m, 2), 0.0);
  }
}

class PricingProperties : public ::testing::Test {
 protected:
  std::mt19937_64 rng{99};
  double uniform(double a, double b) { return std::uniform_real_distribution<double>(a, b)(rng); }
  void draw(std::vector<double>& p, std::vector<double>& beta) {
    const int n = 1 + static_cast<int>(uniform(0, 6));
    p.assign(n, 0.0);
    beta.assign(n, 0.0);
    for (int i = 0; i < n; ++i) {
      p[i] = uniform(0, 1) < 0.15 ? 0.0 : uniform(0.0, 10.0);
      beta[i] = uniform(0, 1) < 0.15 ? 0.0 : uniform(0.0, 10.0);
    }
    p[0] = uniform(0.01, 10.0);
    beta[0] = uniform(0.01, 10.0);
  }
};

TEST_F(PricingProperties, FixedPointAndBranchConsistency) {
  for (int i = 0; i < 2000; ++i) {
    std::vector<double> p, beta;
    draw(p, beta);
    const double capacity = uniform(0.01, 10.0);
    const auto prices = network_prices(p, beta, capacity);
    const double f0 = eval_f(p, beta, 0.0);
    if (prices.lambda > 0.0) {
      EXPECT_GT(f0, capacity - 1e-10);
      EXPECT_NEAR(eval_f(p, beta, prices.lambda), capacity, 1e-9 * std::max(1.0, capacity));
      EXPECT_NEAR(prices.lambda, oracle::capacity_price(p, beta, capacity),
                  1e-9 * std::max(1.0, prices.lambda));
    } else {
      EXPECT_LE(f0, capacity + 1e-10);
    }
    const auto a = network_allocation(p, beta, prices);
    double total = 0.0;
    for (std::size_t k = 0; k < p.size(); ++k) {
      EXPECT_NEAR(a.x[k], a.y[k], 1e-9 * std::max(1.0, a.x[k]));
      EXPECT_GE(prices.mu[k], prices.lambda);
      total += a.y[k];
    }
    EXPECT_LE(total, capacity + 1e-9);
    EXPECT_LE(prices.lambda * (total - capacity), 1e-8);
  }
}
