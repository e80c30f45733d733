#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "kdpa/oracle.hpp"
#include "kdpa/random.hpp"

using namespace kdpa;

namespace {

const ValueDistribution kUniform = uniform_distribution(0, 1);

DiscreteDistribution random_law(CounterRng& rng, std::size_t atoms) {
  std::vector<Atom> a;
  double value = 0.0;
  double total = 0.0;
  for (std::size_t i = 0; i < atoms; ++i) {
    value += 0.05 + rng.uniform_open();
    const double w = 0.1 + rng.uniform_open();
    a.push_back({value, w});
    total += w;
  }
  double assigned = 0.0;
  for (std::size_t i = 0; i + 1 < a.size(); ++i) {
    a[i].probability /= total;
    assigned += a[i].probability;
  }
  a.back().probability = 1.0 - assigned;
  return DiscreteDistribution(a);
}

// Decreasing thresholds placed at midpoints between atoms.
std::vector<double> midpoint_thresholds(const DiscreteDistribution& d, CounterRng& rng, std::size_t k) {
  std::vector<double> mids;
  for (std::size_t i = 0; i + 1 < d.size(); ++i)
    mids.push_back(0.5 * (d.atoms()[i].value + d.atoms()[i + 1].value));
  std::vector<double> out;
  for (std::size_t i = mids.size(); i-- > 0 && out.size() < k;)
    if (rng.uniform_open() < 0.7) out.push_back(mids[i]);
  if (out.empty()) out.push_back(mids.front());
  return out;
}

}  // namespace

TEST(ExactEnumeration, Examples) {
  const DiscreteDistribution coin({{0.0, 0.5}, {1.0, 0.5}});
  EXPECT_NEAR(exact_alg_enumeration(coin, 2, 1, ThresholdPolicy({0.5})), 0.75, 1e-15);
  EXPECT_NEAR(exact_opt_enumeration(coin, 2, 1), 0.75, 1e-15);
  EXPECT_NEAR(exact_opt_enumeration(coin, 2, 2), 1.0, 1e-15);
  const DiscreteDistribution point({{0.4, 1.0}});
  EXPECT_NEAR(exact_alg_enumeration(point, 3, 2, ThresholdPolicy({0.3})), 0.8, 1e-15);
  EXPECT_DOUBLE_EQ(exact_alg_enumeration(point, 3, 1, ThresholdPolicy({0.5})), 0.0);
  const DiscreteDistribution negative({{-1.0, 0.5}, {2.0, 0.5}});
  EXPECT_NEAR(exact_opt_enumeration(negative, 1, 1), 1.0, 1e-15);
}

TEST(ExactEnumeration, Rejections) {
  const DiscreteDistribution coin({{0.0, 0.5}, {1.0, 0.5}});
  try {
    exact_alg_enumeration(coin, 2, 1, ThresholdPolicy({1.0}));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ThresholdOnAtom);
  }
  std::vector<Atom> many;
  for (int i = 0; i < 10; ++i) many.push_back({double(i), 0.1});
  try {
    exact_opt_enumeration(DiscreteDistribution(many), 8, 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::TooLarge);
  }
  EXPECT_THROW(DiscreteDistribution({{0.0, 0.5}, {0.0, 0.5}}), Error);
  EXPECT_THROW(DiscreteDistribution({{0.0, 0.5}, {1.0, 0.6}}), Error);
  EXPECT_THROW(exact_alg_enumeration(coin, 2, 3, ThresholdPolicy({0.5})), Error);
}

TEST(ExactEnumeration, MatchesStagewiseOnRandomLaws) {
  CounterRng rng(31, 0);
  for (int t = 0; t < 25; ++t) {
    const auto d = random_law(rng, 2 + rng.uniform_index(4));
    const int n = 1 + static_cast<int>(rng.uniform_index(5));
    const ThresholdPolicy policy(midpoint_thresholds(d, rng, 1 + rng.uniform_index(4)));
    EXPECT_NEAR(exact_alg_enumeration(d, n, 1, policy), exact_alg_stagewise(d, n, policy), 1e-12) << t;
    EXPECT_LE(exact_alg_enumeration(d, n, 1, policy), exact_opt_enumeration(d, n, 1) + 1e-12);
  }
}

TEST(ExactEnumeration, ThreadCountDoesNotChangeResult) {
  CounterRng rng(2, 0);
  const auto d = random_law(rng, 5);
  const ThresholdPolicy policy(midpoint_thresholds(d, rng, 3));
  EXPECT_EQ(exact_alg_enumeration(d, 6, 2, policy, 1), exact_alg_enumeration(d, 6, 2, policy, 4));
}

TEST(ExactEnumeration, AgreesWithSimulation) {
  const DiscreteDistribution d({{0.1, 0.25}, {0.5, 0.25}, {0.9, 0.5}});
  const ThresholdPolicy policy({0.7, 0.3});
  for (int m = 1; m <= 2; ++m) {
    const double exact = exact_alg_enumeration(d, 4, m, policy);
    const auto est = expected_reward_mc_discrete(d, 4, m, policy, 100'000, 8);
    EXPECT_LE(std::abs(est.mean - exact), 3 * est.std_error);
  }
}

TEST(DeviationCheck, EquilibriumProfileShowsNoGain) {
  const auto profile = thresholds_to_prices(kUniform, 2, {0.8, 0.5});
  const auto report = deviation_check_mc(kUniform, 2, 1, profile, 50, 100'000, 3);
  EXPECT_LE(report.max_excess, 0.0);
  EXPECT_TRUE(report.passed());
  EXPECT_EQ(report.trials, 100'000u);
}

TEST(DeviationCheck, LoweredFirstPriceIsDetected) {
  auto profile = thresholds_to_prices(kUniform, 2, {0.8, 0.5});
  profile.schedule.prices[0] -= 0.05;
  const auto report = deviation_check_mc(kUniform, 2, 1, profile, 50, 100'000, 3);
  EXPECT_GT(report.max_excess, 0.0);
  EXPECT_FALSE(report.passed());
}

TEST(DeviationCheck, Rejections) {
  const auto profile = thresholds_to_prices(kUniform, 2, {0.8, 0.5});
  EXPECT_THROW(deviation_check_mc(kUniform, 1, 1, profile, 10, 100'000, 1), Error);
  EXPECT_THROW(deviation_check_mc(kUniform, 2, 1, profile, 10, 100, 1), Error);
}
