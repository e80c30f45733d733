#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <set>
#include <vector>

#include "kdpa/numeric.hpp"
#include "kdpa/parallel.hpp"
#include "kdpa/random.hpp"

using namespace kdpa;

namespace {
// C(n, i) by the multiplicative formula
double choose(int n, int i) {
  double c = 1.0;
  for (int j = 1; j <= i; ++j) c = c * (n - i + j) / j;
  return c;
}
}  // namespace

TEST(Quadrature, PolynomialIsExact) {
  const double v = integrate([](double x) { return 3 * x * x + 2 * x + 1; }, 0.0, 2.0);
  EXPECT_NEAR(v, 8.0 + 4.0 + 2.0, 1e-12);
}

TEST(Quadrature, SmoothTranscendental) {
  EXPECT_NEAR(integrate([](double x) { return std::exp(-x); }, 0.0, 30.0), -std::expm1(-30.0), 1e-10);
  EXPECT_NEAR(integrate([](double x) { return std::sin(x); }, 0.0, M_PI), 2.0, 1e-10);
}

TEST(Quadrature, KinkedIntegrand) {
  const double v = integrate([](double x) { return std::abs(x - 0.3141); }, 0.0, 1.0);
  const double exact = 0.5 * 0.3141 * 0.3141 + 0.5 * (1 - 0.3141) * (1 - 0.3141);
  EXPECT_NEAR(v, exact, 1e-10);
}

TEST(Quadrature, RejectsInfiniteBounds) {
  EXPECT_THROW(integrate([](double) { return 1.0; }, 0.0, kInf), Error);
}

TEST(Bisection, FindsRoot) {
  const double r = bisect_increasing([](double x) { return x * x * x; }, 2.0, 0.0, 2.0);
  EXPECT_NEAR(r, std::cbrt(2.0), 1e-11);
}

TEST(GoldenSection, FindsMaximum) {
  const auto m = golden_section_max([](double x) { return -(x - 0.37) * (x - 0.37) + 1.0; }, 0.0, 1.0);
  EXPECT_NEAR(m.arg, 0.37, 1e-6);
  EXPECT_NEAR(m.value, 1.0, 1e-12);
}

TEST(Binomial, MatchesDirectFormula) {
  for (int n : {1, 5, 17, 40}) {
    for (double p : {0.0, 0.05, 0.5, 0.83, 1.0}) {
      const auto pmf = binomial_pmf_prefix(n, p, n);
      double total = 0.0;
      for (int i = 0; i <= n; ++i) {
        const double direct = choose(n, i) * std::pow(p, i) * std::pow(1 - p, n - i);
        EXPECT_NEAR(pmf[i], direct, 1e-12 * std::max(1.0, direct)) << n << " " << p << " " << i;
        total += pmf[i];
      }
      EXPECT_NEAR(total, 1.0, 1e-12);
    }
  }
}

TEST(Binomial, LargeTrialsStayFinite) {
  const auto pmf = binomial_pmf_prefix(100000, 0.3, 5);
  for (double v : pmf) EXPECT_TRUE(std::isfinite(v));
  EXPECT_NEAR(binomial_pmf(100000, 30000, 0.3), 1.0 / std::sqrt(2 * M_PI * 100000 * 0.3 * 0.7), 1e-5);
}

TEST(Binomial, ExpectedMinimumMatchesEnumeration) {
  for (int n : {1, 3, 12}) {
    for (int cap : {1, 2, 5, 20}) {
      for (double p : {0.0, 0.1, 0.6, 1.0}) {
        double direct = 0.0;
        for (int i = 0; i <= n; ++i)
          direct += std::min(i, cap) * choose(n, i) * std::pow(p, i) * std::pow(1 - p, n - i);
        EXPECT_NEAR(expected_min_binomial(n, p, cap), direct, 1e-12);
      }
    }
  }
}

TEST(GeometricSum, MatchesRatioForm) {
  for (int n : {1, 2, 7}) {
    EXPECT_NEAR(geometric_sum(0.9, 0.4, n), (std::pow(0.9, n) - std::pow(0.4, n)) / 0.5, 1e-13);
    EXPECT_NEAR(geometric_sum(0.6, 0.6, n), n * std::pow(0.6, n - 1), 1e-13);
  }
}

TEST(RunningStats, MergeEqualsSequential) {
  std::vector<double> xs;
  CounterRng rng(3, 0);
  for (int i = 0; i < 1000; ++i) xs.push_back(rng.uniform_open() * 5.0 - 1.0);
  RunningStats all, left, right;
  for (int i = 0; i < 1000; ++i) {
    all.push(xs[i]);
    (i < 377 ? left : right).push(xs[i]);
  }
  left.merge(right);
  const double mean = std::accumulate(xs.begin(), xs.end(), 0.0) / xs.size();
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  EXPECT_NEAR(all.mean(), mean, 1e-12);
  EXPECT_NEAR(left.mean(), mean, 1e-12);
  EXPECT_NEAR(left.variance(), ss / 999.0, 1e-10);
  EXPECT_EQ(left.count(), 1000u);
}

TEST(CounterRng, StreamsAreReproducible) {
  CounterRng a(42, 7), b(42, 7), c(42, 8);
  for (int i = 0; i < 10; ++i) {
    const auto x = a();
    EXPECT_EQ(x, b());
    EXPECT_NE(x, c());
  }
}

TEST(CounterRng, UniformOpenMoments) {
  CounterRng rng(1, 1);
  RunningStats s;
  for (int i = 0; i < 200000; ++i) {
    const double u = rng.uniform_open();
    ASSERT_GT(u, 0.0);
    ASSERT_LT(u, 1.0);
    s.push(u);
  }
  EXPECT_NEAR(s.mean(), 0.5, 4 * s.std_error());
  EXPECT_NEAR(s.variance(), 1.0 / 12.0, 2e-3);
}

TEST(CounterRng, SubsetSamplingIsUniform) {
  std::vector<int> counts(5, 0);
  for (std::uint64_t t = 0; t < 50000; ++t) {
    CounterRng rng(9, t);
    std::vector<int> items{0, 1, 2, 3, 4};
    sample_front(std::span<int>(items), 2, rng);
    ASSERT_NE(items[0], items[1]);
    ++counts[items[0]];
    ++counts[items[1]];
  }
  for (int c : counts) EXPECT_NEAR(c / 100000.0, 0.2, 0.006);
}

TEST(DeterministicReduce, IndependentOfThreadCount) {
  auto block = [](std::size_t b, std::size_t e) {
    RunningStats s;
    for (std::size_t t = b; t < e; ++t) {
      CounterRng rng(5, t);
      s.push(rng.uniform_open());
    }
    return s;
  };
  const auto one = deterministic_reduce<RunningStats>(50000, 1, block);
  const auto four = deterministic_reduce<RunningStats>(50000, 4, block);
  EXPECT_EQ(one.mean(), four.mean());
  EXPECT_EQ(one.variance(), four.variance());
  EXPECT_EQ(one.count(), 50000u);
}

TEST(DeterministicReduce, PropagatesExceptions) {
  auto block = [](std::size_t b, std::size_t) -> RunningStats {
    if (b >= kReductionBlock) throw Error(ErrorCode::DomainError, "boom");
    return {};
  };
  EXPECT_THROW(deterministic_reduce<RunningStats>(3 * kReductionBlock, 2, block), Error);
}
