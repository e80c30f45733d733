#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "kdpa/auction.hpp"
#include "kdpa/dist.hpp"
#include "kdpa/equilibrium.hpp"
#include "kdpa/oracle.hpp"
#include "kdpa/prophet.hpp"
#include "kdpa/random.hpp"

namespace kdpa {

struct PropertyResult {
  std::string name;
  bool passed = false;
  /// Distance to the failure boundary (tolerance minus measured error, or
  /// measured value minus bound); negative when the property fails.
  double margin = 0.0;
};

enum class Suite { Fast, Full };

namespace detail {

inline PropertyResult within(std::string name, double error, double tol) {
  return {std::move(name), error <= tol, tol - error};
}

inline PropertyResult at_least(std::string name, double value, double bound) {
  return {std::move(name), value >= bound, value - bound};
}

// sum_i C(n-1,i) x^{n-1-i} (1-x)^i / (i+1), term by term via lgamma
inline double p_polynomial_direct(int n, double x) {
  double s = 0.0;
  for (int i = 0; i <= n - 1; ++i) {
    const double log_c = std::lgamma(n) - std::lgamma(i + 1.0) - std::lgamma(n - i);
    s += std::exp(log_c + (n - 1 - i) * std::log(x) + i * std::log1p(-x)) / (i + 1);
  }
  return s;
}

inline std::vector<double> random_decreasing(CounterRng& rng, std::size_t k, double lo, double hi) {
  std::vector<double> xs(k);
  for (auto& x : xs) x = lo + (hi - lo) * rng.uniform_open();
  std::sort(xs.begin(), xs.end(), std::greater<>());
  for (std::size_t i = 1; i < xs.size(); ++i)
    if (xs[i] >= xs[i - 1] - 1e-3) xs[i] = xs[i - 1] - 1e-3;
  return xs;
}

}  // namespace detail

inline std::vector<PropertyResult> run_property_suite(Suite suite, std::uint64_t seed = 20240601,
                                                      unsigned threads = 1) {
  std::vector<PropertyResult> out;
  CounterRng rng(seed, 0);
  const auto uniform = uniform_distribution(0.0, 1.0);
  const auto expo = exponential_distribution(1.0);

  {
    double worst = 0.0;
    for (int t = 0; t < 500; ++t) {
      const int n = 1 + static_cast<int>(rng.uniform_index(60));
      const double x = rng.uniform_open();
      worst = std::max(worst, std::abs(detail::p_polynomial_direct(n, x) - p_polynomial(n, x)));
    }
    out.push_back(detail::within("p_polynomial closed form", worst, 1e-10));
  }
  {
    double worst = kInf;
    for (int n = 1; n <= 200; ++n) {
      const double x = std::exp(-1.0 / n);
      worst = std::min(worst, std::min(1.0 - std::pow(x, n), p_polynomial(n, x)));
    }
    out.push_back(detail::at_least("single-unit polynomial floor", worst,
                                   guarantee_single(1) - 1e-12));
  }
  {
    double worst_margin = kInf;
    for (int m = 1; m <= 5; ++m) {
      const double bound = detail::single_threshold_share(m);
      for (int s = 0; s < 40; ++s) {
        const int n = 10 * m + static_cast<int>((2000 - 10 * m) * s / 39);
        const auto poly = selection_polynomials(n, m, 1.0 - static_cast<double>(m) / n);
        worst_margin = std::min(worst_margin, std::min(poly.a, poly.b) - bound);
      }
    }
    out.push_back(detail::at_least("multi-unit polynomial floor", worst_margin, -1e-9));
  }
  {
    double worst = 0.0;
    for (int t = 0; t < 500; ++t) {
      const int n = 1 + static_cast<int>(rng.uniform_index(80));
      const int m = 1 + static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(n)));
      const double x = rng.uniform_open();
      const auto poly = selection_polynomials(n, m, x);
      worst = std::max(worst, std::abs(poly.b - m * poly.a / (n * (1.0 - x))));
    }
    out.push_back(detail::within("selection polynomial identity", worst, 1e-10));
  }
  {
    double worst = 0.0;
    for (int n : {1, 2, 7, 30}) {
      for (double x : {0.1, 0.5, 0.93}) {
        worst = std::max(worst, std::abs(selection_polynomials(n, 1, x).a - (1.0 - std::pow(x, n))));
        worst = std::max(worst, std::abs(selection_polynomials(n, 1, x).b - p_polynomial(n, x)));
        worst = std::max(worst, std::abs(selection_polynomials(n, n, x).a - (1.0 - x)));
        worst = std::max(worst, std::abs(selection_polynomials(n, n + 3, x).b - 1.0));
      }
    }
    out.push_back(detail::within("selection polynomial reductions", worst, 1e-12));
  }
  {
    double worst = 0.0;
    for (const auto* d : {&uniform, &expo}) {
      for (int n : {3, 10, 100}) {
        const auto tau = balanced_thresholds_single(*d, n, 5);
        for (std::size_t j = 0; j < tau.size(); ++j)
          worst = std::max(worst, std::abs(std::pow(d->cdf(tau[j]), n) - std::exp(-(j + 1.0))));
        const auto tau_m = balanced_thresholds_multi(*d, n, 2, 4);
        for (std::size_t r = 0; r < tau_m.size(); ++r)
          worst = std::max(worst, std::abs(d->cdf(tau_m[r]) - std::pow(1.0 - 2.0 / n, r + 1.0)));
      }
    }
    out.push_back(detail::within("balanced quantile identity", worst, 1e-9));
  }
  {
    double worst = 0.0;
    for (const auto* d : {&uniform, &expo}) {
      for (int t = 0; t < 1000; ++t) {
        const double q = rng.uniform_open();
        worst = std::max(worst, std::abs(d->cdf(d->quantile(q)) - q));
      }
    }
    out.push_back(detail::within("quantile round trip", worst, 1e-8));
  }
  {
    const double n = 10.0;
    const double k = 5.0;
    const double closed = 0.5 * (1.0 - std::exp(-1.0)) * (1.0 + std::exp(-1.0 / n)) *
                          (1.0 - std::exp(-k * (1.0 + 1.0 / n))) / (1.0 - std::exp(-(1.0 + 1.0 / n)));
    const double exact = exact_alg_single(uniform, 10, balanced_thresholds_single(uniform, 10, 5));
    out.push_back(detail::within("uniform balanced value closed form", std::abs(exact - closed), 1e-12));
    out.push_back(detail::within("uniform offline optimum", std::abs(opt_offline(uniform, 10, 1) - 10.0 / 11.0), 1e-9));
  }
  {
    double round_trip = 0.0;
    double residual = 0.0;
    double audit = 0.0;
    for (int t = 0; t < 50; ++t) {
      const int n = 2 + static_cast<int>(rng.uniform_index(9));
      const std::size_t k = 1 + rng.uniform_index(6);
      const auto tau = detail::random_decreasing(rng, k, 0.05, 0.95);
      const auto profile = thresholds_to_prices(uniform, n, tau);
      const auto back = prices_to_thresholds(uniform, profile.schedule);
      const auto again = thresholds_to_prices(uniform, n, back.thresholds);
      for (std::size_t j = 0; j < k; ++j) {
        round_trip = std::max(round_trip, std::abs(back.thresholds[j] - tau[j]));
        round_trip = std::max(round_trip, std::abs(again.schedule.prices[j] - profile.schedule.prices[j]));
      }
      for (std::size_t j = 1; j < k; ++j)
        residual = std::max(residual, std::abs(indifference_residual(profile, j)));
      const auto report = best_response_audit(uniform, profile, 200);
      audit = std::max(audit, std::max(report.max_gain, report.max_indifference_gap));
    }
    out.push_back(detail::within("equilibrium round trip", round_trip, 1e-8));
    out.push_back(detail::within("indifference residual", residual, 1e-9));
    out.push_back(detail::within("best response audit", audit, 1e-8));
  }
  {
    double worst = 0.0;
    for (int n : {2, 5, 10}) {
      const auto tau = detail::random_decreasing(rng, 4, 0.1, 0.9);
      const auto single = thresholds_to_prices(uniform, n, tau);
      const auto multi = thresholds_to_prices_multi(uniform, n, 1, tau);
      for (std::size_t j = 0; j < tau.size(); ++j)
        worst = std::max(worst, std::abs(single.schedule.prices[j] - multi.schedule.prices[j]));
    }
    out.push_back(detail::within("multi-unit prices reduce to one unit", worst, 1e-10));
  }
  {
    double worst = 0.0;
    const DiscreteDistribution d({{0.0, 0.2}, {0.4, 0.3}, {0.7, 0.1}, {1.0, 0.4}});
    for (int n = 1; n <= 4; ++n) {
      const ThresholdPolicy policy({0.85, 0.55, 0.2});
      worst = std::max(worst, std::abs(exact_alg_enumeration(d, n, 1, policy, threads) -
                                       exact_alg_stagewise(d, n, policy)));
    }
    out.push_back(detail::within("enumeration matches stage decomposition", worst, 1e-12));
  }

  if (suite == Suite::Fast) return out;

  {
    bool all = true;
    double worst = kInf;
    for (const auto* d : {&uniform, &expo}) {
      for (int n : {5, 20}) {
        const auto policy = balanced_thresholds_single(*d, n, 3);
        const double exact = exact_alg_single(*d, n, policy);
        const auto est = expected_reward_mc({*d, n, 1, 0}, policy, 1'000'000, seed + n, threads);
        const double slack = 3.0 * est.std_error - std::abs(est.mean - exact);
        all = all && slack >= 0.0;
        worst = std::min(worst, slack);
      }
    }
    out.push_back({"Monte Carlo brackets exact value", all, worst});
  }
  {
    bool all = true;
    double worst = kInf;
    for (const auto* g : {&uniform, &expo}) {
      const auto profile = revenue_prices(*g, 10, 3);
      const auto est = expected_outcome_mc({*g, 10, 1, 3}, profile, 1'000'000, seed + 7, threads);
      const double slack = 3.0 * est.revenue_minus_virtual_surplus.std_error -
                           std::abs(est.revenue_minus_virtual_surplus.mean);
      all = all && slack >= 0.0;
      worst = std::min(worst, slack);
    }
    out.push_back({"revenue equals virtual surplus", all, worst});
  }
  {
    bool all = true;
    double worst = kInf;
    const DiscreteDistribution d({{0.1, 0.25}, {0.5, 0.25}, {0.9, 0.5}});
    for (int n = 2; n <= 4; ++n) {
      for (int m = 1; m <= 2; ++m) {
        const ThresholdPolicy policy({0.7, 0.3});
        const double exact = exact_alg_enumeration(d, n, m, policy, threads);
        const auto est = expected_reward_mc_discrete(d, n, m, policy, 100'000, seed + 11, threads);
        const double slack = 3.0 * est.std_error - std::abs(est.mean - exact);
        all = all && slack >= 0.0;
        worst = std::min(worst, slack);
      }
    }
    out.push_back({"enumeration agrees with simulation", all, worst});
  }
  {
    double worst = kInf;
    double previous = 0.0;
    bool monotone = true;
    for (int k = 1; k <= 5; ++k) {
      const auto dp = dp_solve(uniform, 10, k, 2000);
      const double balanced = exact_alg_single(uniform, 10, balanced_thresholds_single(uniform, 10, k));
      worst = std::min(worst, dp.value + dp.grid_error - balanced);
      monotone = monotone && dp.value >= previous;
      previous = dp.value;
    }
    out.push_back({"dynamic program dominates balanced thresholds", worst >= 0.0 && monotone, worst});
  }
  return out;
}

}  // namespace kdpa
