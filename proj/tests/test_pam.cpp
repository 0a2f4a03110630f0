#include <gtest/gtest.h>

#include <random>

#include "dauction/pam.hpp"
#include "oracles.hpp"

using namespace dauction;

namespace {

Scenario market(double capacity) {
  return single_link_scenario({PayoffSpec::linear(3.0), PayoffSpec::shifted_log(2.0)},
                              CostSpec::polynomial(1.0, 2), capacity);
}

}  // namespace

TEST(PamPayoff, PaymentAgainstZeroSignalIsLost) {
  const auto s = market(2.0);
  BidProfile b = BidProfile::zeros(2, 1);
  b.p(0, 0) = 1.7;
  EXPECT_DOUBLE_EQ(pam_user_payoff(0, b, s), s.users[0].value(0.0) - 1.7);
  EXPECT_DOUBLE_EQ(pam_link_payoff(b, s), 1.7);
}

TEST(PamPayoff, ZeroProfile) {
  const auto s = market(2.0);
  const auto b = BidProfile::zeros(2, 1);
  EXPECT_EQ(pam_user_payoff(0, b, s), 0.0);
  EXPECT_EQ(pam_user_payoff(1, b, s), 0.0);
  EXPECT_EQ(pam_link_payoff(b, s), 0.0);
}

TEST(PamPayoff, BindingBranchWorkedExample) {
  const auto s = single_link_scenario({PayoffSpec::linear(3.0)}, CostSpec::polynomial(1.0, 2), 1.0);
  BidProfile b = BidProfile::zeros(1, 1);
  b.p(0, 0) = 4.0;
  b.beta(0, 0) = 4.0;
  // Independent recomputation: lambda from the oracle, then x = p / mu.
  const double lambda = oracle::capacity_price({4.0}, {4.0}, 1.0);
  const double mu = 0.5 * (lambda + std::sqrt(lambda * lambda + 4.0));
  const double x = 4.0 / mu;
  EXPECT_NEAR(pam_user_payoff(0, b, s), 3.0 * x - 4.0, 1e-12);
  EXPECT_NEAR(pam_user_payoff(0, b, s), 3.0 - 4.0, 1e-9);
  EXPECT_NEAR(pam_link_payoff(b, s), -1.0 + x * x / 4.0, 1e-12);
  EXPECT_NEAR(pam_link_payoff(b, s), -1.0 + 0.25, 1e-9);
}

TEST(PamNash, ZeroProfileCertified) {
  for (double capacity : {0.5, 2.0, kInfinity}) {
    const auto report = verify_pam_nash(BidProfile::zeros(2, 1), market(capacity), 200);
    EXPECT_TRUE(report.certified);
    EXPECT_LE(report.max_gain, 1e-12);
    EXPECT_FALSE(report.improving.has_value());
  }
}

TEST(PamNash, SignalWithoutPaymentInvitesAUserDeviation) {
  const auto s = market(2.0);
  BidProfile b = BidProfile::zeros(2, 1);
  b.beta(1, 0) = 3.0;
  // With no payments the link has nothing to gain, so the improving move
  // belongs to user 1. Its isolated optimum maximises U(sqrt(3 q)) - q.
  const double q_star = oracle::argmax(
      [&](double q) { return s.users[1].value(std::sqrt(q * 3.0)) - q; }, 0.0, 10.0);
  BidProfile at_star = b;
  at_star.p(1, 0) = std::min(q_star, 4.0 / 3.0);
  EXPECT_GT(pam_user_payoff(1, at_star, s), 0.0);

  const auto report = verify_pam_nash(b, s, 64);
  EXPECT_FALSE(report.certified);
  ASSERT_TRUE(report.improving.has_value());
  EXPECT_EQ(report.improving->agent, Deviation::Agent::User);
  EXPECT_EQ(report.improving->agent_index, 1u);
  EXPECT_GE(report.improving->gain, pam_user_payoff(1, at_star, s) - 1e-9);
}

TEST(PamNash, PaymentWithoutSignalShouldDrop) {
  const auto s = market(2.0);
  BidProfile b = BidProfile::zeros(2, 1);
  b.p(0, 0) = 0.8;
  const auto report = verify_pam_nash(b, s, 16);
  ASSERT_TRUE(report.improving.has_value());
  EXPECT_EQ(report.improving->agent, Deviation::Agent::User);
  EXPECT_EQ(report.improving->to, 0.0);
  EXPECT_NEAR(report.improving->gain, 0.8, 1e-12);
}

TEST(PamDynamics, CollapsesWithinTwoRounds) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> draw(0.0, 5.0);
  for (double capacity : {1.0, kInfinity}) {
    const auto s = market(capacity);
    for (int start = 0; start < 5; ++start) {
      BidProfile b = BidProfile::zeros(2, 1);
      for (std::size_t m = 0; m < 2; ++m) {
        b.p(m, 0) = draw(rng);
        b.beta(m, 0) = draw(rng);
      }
      const auto traj = pam_best_response_dynamics(s, b, 3);
      ASSERT_EQ(traj.size(), 4u);
      EXPECT_EQ(traj[0].round, 0);
      EXPECT_EQ(traj[1].bids.beta.max_abs(), 0.0);
      EXPECT_LT(traj[2].max_bid, 1e-6);
      EXPECT_LT(traj[3].max_bid, 1e-6);
      EXPECT_EQ(traj[2].utility, 0.0);
    }
  }
}

TEST(PamDynamics, ZeroStaysZero) {
  const auto traj = pam_best_response_dynamics(market(2.0), BidProfile::zeros(2, 1), 2);
  for (const auto& step : traj) EXPECT_EQ(step.max_bid, 0.0);
  EXPECT_THROW(pam_best_response_dynamics(market(2.0), BidProfile::zeros(2, 1), 0), InputError);
}

TEST(PamMultiLink, ZeroProfileCertifiedAndDeviationFound) {
  Scenario s = market(1.0);
  s.links.push_back(Link{CostSpec::polynomial(2.0, 3), kInfinity});
  EXPECT_TRUE(verify_pam_nash(BidProfile::zeros(2, 2), s, 32).certified);
  BidProfile b = BidProfile::zeros(2, 2);
  b.p(0, 1) = 0.3;
  b.beta(0, 1) = 1.0;
  EXPECT_FALSE(verify_pam_nash(b, s, 32).certified);
}
