#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "kdpa/equilibrium.hpp"
#include "kdpa/random.hpp"

using namespace kdpa;

namespace {

const ValueDistribution kUniform = uniform_distribution(0, 1);
const ValueDistribution kExp = exponential_distribution(1);

double choose(int n, int i) {
  double c = 1.0;
  for (int j = 1; j <= i; ++j) c = c * (n - i + j) / j;
  return c;
}

// Winning probability of a buyer stopping at a round whose predecessors hold
// quantile `prev` and which itself ends at quantile `cur`, by enumerating the
// number r of opponents stopping earlier and l stopping at the same round.
double win_probability_direct(int n, int m, double prev, double cur) {
  double w = 0.0;
  for (int r = 0; r <= n - 1; ++r) {
    for (int l = 0; l <= n - 1 - r; ++l) {
      const int below = n - 1 - r - l;
      const double prob = choose(n - 1, r) * choose(n - 1 - r, l) * std::pow(1 - prev, r) *
                          std::pow(prev - cur, l) * std::pow(cur, below);
      if (r < m) w += prob * std::min(1.0, double(m - r) / (l + 1));
    }
  }
  return w;
}

std::vector<double> random_thresholds(CounterRng& rng, std::size_t k, double lo, double hi) {
  std::vector<double> t(k);
  for (auto& x : t) x = lo + (hi - lo) * rng.uniform_open();
  std::sort(t.begin(), t.end(), std::greater<>());
  for (std::size_t i = 1; i < k; ++i) t[i] = std::min(t[i], t[i - 1] - 2e-3);
  return t;
}

}  // namespace

TEST(ThresholdsToPrices, HandSolvedInstance) {
  const auto profile = thresholds_to_prices(kUniform, 2, {0.8, 0.5});
  ASSERT_EQ(profile.schedule.prices.size(), 2u);
  EXPECT_NEAR(profile.schedule.prices[0], 0.8 - 1.3 / 1.8 * 0.3, 1e-14);
  EXPECT_NEAR(profile.schedule.prices[0], 0.583333, 1e-6);
  EXPECT_DOUBLE_EQ(profile.schedule.prices[1], 0.5);
  EXPECT_NEAR(round_utility(profile, 1, 0.8), 0.195, 1e-12);
  EXPECT_NEAR(round_utility(profile, 2, 0.8), 0.195, 1e-12);
  EXPECT_NEAR(indifference_residual(profile, 1), 0.0, 1e-14);
}

TEST(ThresholdsToPrices, SingleRound) {
  const auto profile = thresholds_to_prices(kExp, 4, {1.7});
  EXPECT_DOUBLE_EQ(profile.schedule.prices[0], 1.7);
}

TEST(ThresholdsToPrices, Rejections) {
  try {
    thresholds_to_prices(kUniform, 1, {0.8, 0.5});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DegenerateCompetition);
  }
  EXPECT_THROW(thresholds_to_prices(kUniform, 3, {0.5, 0.8}), Error);
  EXPECT_THROW(thresholds_to_prices(kUniform, 3, {0.5, 0.0}), Error);
}

TEST(IndifferenceResidual, DegenerateForms) {
  EquilibriumProfile p;
  p.thresholds = {0.7, 0.4};
  p.quantiles = {1.0, 0.7, 0.4};
  p.schedule = {{0.6, 0.4}, 1, 1};
  EXPECT_NEAR(indifference_residual(p, 1), (0.7 - 0.6) - (0.7 - 0.4), 1e-15);
  p.schedule = {{0.7, 0.7}, 5, 1};
  EXPECT_DOUBLE_EQ(indifference_residual(p, 1), 0.0);
  EXPECT_THROW(indifference_residual(p, 2), Error);
}

TEST(PricesToThresholds, HandSolvedInverse) {
  const auto profile = prices_to_thresholds(kUniform, {{0.8 - 1.3 / 1.8 * 0.3, 0.5}, 2, 1});
  EXPECT_NEAR(profile.thresholds[0], 0.8, 1e-10);
  EXPECT_NEAR(profile.thresholds[1], 0.5, 1e-15);
  const auto single = prices_to_thresholds(kUniform, {{0.42}, 3, 1});
  EXPECT_DOUBLE_EQ(single.thresholds[0], 0.42);
}

TEST(PricesToThresholds, RoundTripsRandomInstances) {
  CounterRng rng(77, 0);
  for (int t = 0; t < 60; ++t) {
    const int n = 2 + static_cast<int>(rng.uniform_index(9));
    const std::size_t k = 1 + rng.uniform_index(6);
    const bool exp_law = t % 2 == 1;
    const auto& g = exp_law ? kExp : kUniform;
    const auto tau = exp_law ? random_thresholds(rng, k, 0.05, 4.0) : random_thresholds(rng, k, 0.05, 0.95);
    const auto forward = thresholds_to_prices(g, n, tau);
    const auto back = prices_to_thresholds(g, forward.schedule);
    const auto again = thresholds_to_prices(g, n, back.thresholds);
    for (std::size_t j = 0; j < k; ++j) {
      EXPECT_NEAR(back.thresholds[j], tau[j], 1e-8) << t;
      EXPECT_NEAR(again.schedule.prices[j], forward.schedule.prices[j], 1e-8) << t;
      EXPECT_GE(forward.thresholds[j], forward.schedule.prices[j]);
      if (j > 0) {
        EXPECT_LT(forward.schedule.prices[j], forward.schedule.prices[j - 1]);
      }
    }
    EXPECT_DOUBLE_EQ(forward.thresholds.back(), forward.schedule.prices.back());
    for (std::size_t j = 1; j < k; ++j) {
      EXPECT_LE(std::abs(indifference_residual(forward, j)), 1e-9);
      EXPECT_LE(std::abs(indifference_residual(back, j)), 1e-9);
    }
  }
}

TEST(PricesToThresholds, NoBracketForUnsupportablePrices) {
  // the first price exceeds (1 + p2^2) / 2, what a buyer at the top of the
  // support would accept, so no threshold supports it
  try {
    prices_to_thresholds(kUniform, {{0.95, 0.8}, 2, 1});
    FAIL();
  } catch (const Error& e) {
    EXPECT_TRUE(e.code() == ErrorCode::NoBracket || e.code() == ErrorCode::NonMinimal);
  }
  EXPECT_THROW(prices_to_thresholds(kUniform, {{0.5, 0.6}, 2, 1}), Error);
  EXPECT_THROW(prices_to_thresholds(kUniform, {{0.6, 0.5}, 1, 1}), Error);
}

TEST(MultiUnitPrices, WeightMatchesEnumeration) {
  CounterRng rng(4, 0);
  for (int t = 0; t < 40; ++t) {
    const int n = 2 + static_cast<int>(rng.uniform_index(8));
    const int m = 1 + static_cast<int>(rng.uniform_index(n - 1));
    const double prev = 0.2 + 0.8 * rng.uniform_open();
    const double cur = prev * rng.uniform_open();
    EXPECT_NEAR(win_weight({prev, cur}, n, m, 1), win_probability_direct(n, m, prev, cur), 1e-12);
  }
}

TEST(MultiUnitPrices, ReducesToSingleUnit) {
  CounterRng rng(8, 0);
  for (int t = 0; t < 20; ++t) {
    const int n = 2 + static_cast<int>(rng.uniform_index(9));
    const auto tau = random_thresholds(rng, 1 + rng.uniform_index(6), 0.05, 0.95);
    const auto a = thresholds_to_prices(kUniform, n, tau);
    const auto b = thresholds_to_prices_multi(kUniform, n, 1, tau);
    for (std::size_t j = 0; j < tau.size(); ++j)
      EXPECT_NEAR(a.schedule.prices[j], b.schedule.prices[j], 1e-10);
  }
}

TEST(MultiUnitPrices, HandInstance) {
  // n = 3, m = 2, tau = (0.7, 0.4): p_2 = 0.4 and p_1 solves W1 (0.7 - p1) = W2 (0.7 - 0.4)
  const auto profile = thresholds_to_prices_multi(kUniform, 3, 2, {0.7, 0.4});
  const double w1 = win_probability_direct(3, 2, 1.0, 0.7);
  const double w2 = win_probability_direct(3, 2, 0.7, 0.4);
  EXPECT_DOUBLE_EQ(profile.schedule.prices[1], 0.4);
  EXPECT_NEAR(profile.schedule.prices[0], 0.7 - w2 / w1 * 0.3, 1e-12);
  EXPECT_LT(profile.schedule.prices[0], 0.7);
  EXPECT_GT(profile.schedule.prices[0], 0.4);
  EXPECT_NEAR(thresholds_to_prices_multi(kUniform, 3, 2, {0.55}).schedule.prices[0], 0.55, 0);
  EXPECT_THROW(thresholds_to_prices_multi(kUniform, 3, 3, {0.7, 0.4}), Error);
  EXPECT_TRUE(best_response_audit(kUniform, profile, 500).passed());
}

TEST(BidOf, HalfOpenRounds) {
  const auto profile = thresholds_to_prices(kUniform, 2, {0.8, 0.5});
  EXPECT_DOUBLE_EQ(bid_of(0.95, profile), profile.schedule.prices[0]);
  EXPECT_DOUBLE_EQ(bid_of(0.8, profile), profile.schedule.prices[0]);
  EXPECT_DOUBLE_EQ(bid_of(0.79, profile), 0.5);
  EXPECT_DOUBLE_EQ(bid_of(0.5, profile), 0.5);
  EXPECT_DOUBLE_EQ(bid_of(0.49, profile), 0.0);
  EXPECT_EQ(bid_round(0.49, profile), 0u);
}

TEST(BestResponseAudit, SolvedProfilePasses) {
  const auto profile = thresholds_to_prices(kUniform, 2, {0.8, 0.5});
  const auto report = best_response_audit(kUniform, profile, 1000);
  EXPECT_LE(report.max_gain, 1e-8);
  EXPECT_LE(report.max_indifference_gap, 1e-12);
  EXPECT_TRUE(report.passed());
  // below the lowest threshold every round pays at most zero
  for (double v : {0.1, 0.3, 0.49})
    for (std::size_t j = 1; j <= 2; ++j) EXPECT_LE(round_utility(profile, j, v), 0.0);
}

TEST(BestResponseAudit, PerturbedPriceFails) {
  auto profile = thresholds_to_prices(kUniform, 2, {0.8, 0.5});
  profile.schedule.prices[0] += 0.01;
  const auto report = best_response_audit(kUniform, profile, 1000);
  EXPECT_GT(report.max_gain, 1e-4);
  EXPECT_FALSE(report.passed());
}

TEST(BestResponseAudit, PrescribedRoundMaximisesUtility) {
  CounterRng rng(12, 0);
  for (int t = 0; t < 10; ++t) {
    const int n = 2 + static_cast<int>(rng.uniform_index(9));
    const auto tau = random_thresholds(rng, 1 + rng.uniform_index(6), 0.05, 0.95);
    const auto profile = thresholds_to_prices(kUniform, n, tau);
    for (int i = 0; i < 1000; ++i) {
      const double v = (i + 0.5) / 1000.0;
      const std::size_t chosen = bid_round(v, profile);
      const double u = chosen == 0 ? 0.0 : round_utility(profile, chosen, v);
      for (std::size_t j = 1; j <= profile.rounds(); ++j) EXPECT_LE(round_utility(profile, j, v), u + 1e-12);
      EXPECT_GE(u, -1e-12);
    }
  }
}
