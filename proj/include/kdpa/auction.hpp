#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "kdpa/dist.hpp"
#include "kdpa/equilibrium.hpp"
#include "kdpa/error.hpp"
#include "kdpa/numeric.hpp"
#include "kdpa/parallel.hpp"
#include "kdpa/prophet.hpp"
#include "kdpa/random.hpp"

namespace kdpa {

struct AuctionInstance {
  ValueDistribution values_dist;
  int n = 2;
  int m = 1;
  int k = 1;

  void validate() const {
    detail::require(n >= 2, ErrorCode::DomainError, "need n >= 2 buyers");
    detail::require(m >= 1 && m <= n, ErrorCode::DomainError, "need 1 <= m <= n");
    detail::require(k >= 1, ErrorCode::DomainError, "need k >= 1");
  }
};

struct Winner {
  std::size_t buyer = 0;
  std::size_t round = 0;
  double price = 0.0;
  double value = 0.0;
};

struct AuctionOutcome {
  std::vector<Winner> winners;
  double revenue = 0.0;
  double welfare = 0.0;
  double virtual_surplus = 0.0;
};

inline constexpr int kRegularityGrid = 1000;

namespace detail {
inline VirtualValueTransform regular_transform(const ValueDistribution& g) {
  VirtualValueTransform t(g);
  if (!check_regularity(t, kRegularityGrid))
    throw Error(ErrorCode::Irregular, "virtual value is not monotone");
  return t;
}
}  // namespace detail

// ---------------------------------------------------------------------------
// Price designers
// ---------------------------------------------------------------------------

/// Revenue-oriented schedule: thresholds at quantiles
/// (1 - G(rho)) e^{-j/n} + G(rho) above the reserve rho, prices from the
/// indifference recursion with p_k = tau_k.
inline EquilibriumProfile revenue_prices(const ValueDistribution& g, int n, int k) {
  detail::require(n >= 1 && k >= 1, ErrorCode::DomainError, "need n >= 1 and k >= 1");
  const auto t = detail::regular_transform(g);
  const double base = g.cdf(t.reserve());
  const double alpha = std::exp(-1.0 / n);
  std::vector<double> tau(static_cast<std::size_t>(k));
  std::vector<double> beta(static_cast<std::size_t>(k) + 1, 1.0);
  double alpha_pow = 1.0;
  for (int j = 1; j <= k; ++j) {
    alpha_pow *= alpha;
    beta[static_cast<std::size_t>(j)] = (1.0 - base) * alpha_pow + base;
    tau[static_cast<std::size_t>(j - 1)] = g.quantile(beta[static_cast<std::size_t>(j)]);
  }
  detail::require_decreasing(tau, "thresholds");
  return detail::prices_from_quantiles(std::move(tau), std::move(beta), n, 1);
}

/// Welfare-oriented schedule: tau_j = G^{-1}(e^{-j/n}) with the same recursion.
inline EquilibriumProfile welfare_prices(const ValueDistribution& g, int n, int k) {
  detail::require(n >= 2 && k >= 1, ErrorCode::DomainError, "need n >= 2 and k >= 1");
  std::vector<double> tau(static_cast<std::size_t>(k));
  std::vector<double> beta(static_cast<std::size_t>(k) + 1, 1.0);
  for (int j = 1; j <= k; ++j) {
    beta[static_cast<std::size_t>(j)] = std::exp(-static_cast<double>(j) / n);
    tau[static_cast<std::size_t>(j - 1)] = g.quantile(beta[static_cast<std::size_t>(j)]);
  }
  detail::require_decreasing(tau, "thresholds");
  return detail::prices_from_quantiles(std::move(tau), std::move(beta), n, 1);
}

// ---------------------------------------------------------------------------
// Simulation
// ---------------------------------------------------------------------------

namespace detail {

struct AuctionScratch {
  std::vector<double> values;
  std::vector<std::size_t> bidders;
};

/// Allocates by descending price; a round with more bidders than remaining
/// units serves a uniformly random subset of them.
inline AuctionOutcome allocate(std::span<const double> values, const EquilibriumProfile& profile,
                               int m, const ValueDistribution& g, CounterRng& rng,
                               std::vector<std::size_t>& bidders) {
  AuctionOutcome out;
  std::size_t remaining = static_cast<std::size_t>(m);
  const auto& p = profile.schedule.prices;
  for (std::size_t j = 1; j <= profile.rounds() && remaining > 0; ++j) {
    bidders.clear();
    for (std::size_t i = 0; i < values.size(); ++i)
      if (bid_round(values[i], profile) == j) bidders.push_back(i);
    const std::size_t take = std::min(remaining, bidders.size());
    if (take < bidders.size()) sample_front(std::span<std::size_t>(bidders), take, rng);
    for (std::size_t w = 0; w < take; ++w) {
      const std::size_t buyer = bidders[w];
      out.winners.push_back({buyer, j, p[j - 1], values[buyer]});
      out.revenue += p[j - 1];
      out.welfare += values[buyer];
      out.virtual_surplus += virtual_value(g, values[buyer]);
    }
    remaining -= take;
  }
  return out;
}

}  // namespace detail

/// Runs the auction on given buyer values.
inline AuctionOutcome run_kdpa(std::span<const double> values, const EquilibriumProfile& profile,
                               int m, const ValueDistribution& g, CounterRng& rng) {
  std::vector<std::size_t> bidders;
  return detail::allocate(values, profile, m, g, rng, bidders);
}

/// Draws n buyer values from G and runs the auction.
inline AuctionOutcome simulate_kdpa(const AuctionInstance& inst, const EquilibriumProfile& profile,
                                    CounterRng& rng) {
  inst.validate();
  detail::require(profile.rounds() == static_cast<std::size_t>(inst.k), ErrorCode::DomainError,
                  "profile round count differs from the instance");
  std::vector<double> values(static_cast<std::size_t>(inst.n));
  for (auto& v : values) v = inst.values_dist.quantile(rng.uniform_open());
  return run_kdpa(values, profile, inst.m, inst.values_dist, rng);
}

struct OutcomeEstimates {
  Estimate revenue;
  Estimate welfare;
  Estimate virtual_surplus;
  /// Paired per-trial difference revenue - virtual surplus.
  Estimate revenue_minus_virtual_surplus;
};

inline OutcomeEstimates expected_outcome_mc(const AuctionInstance& inst,
                                            const EquilibriumProfile& profile,
                                            std::uint64_t trials, std::uint64_t seed,
                                            unsigned threads = 1) {
  inst.validate();
  detail::require(trials >= 1, ErrorCode::DomainError, "need trials >= 1");
  detail::require(profile.rounds() == static_cast<std::size_t>(inst.k), ErrorCode::DomainError,
                  "profile round count differs from the instance");
  struct Acc {
    RunningStats revenue, welfare, virtual_surplus, difference;
    void merge(const Acc& o) {
      revenue.merge(o.revenue);
      welfare.merge(o.welfare);
      virtual_surplus.merge(o.virtual_surplus);
      difference.merge(o.difference);
    }
  };
  auto block = [&](std::size_t begin, std::size_t end) {
    Acc acc;
    std::vector<double> values(static_cast<std::size_t>(inst.n));
    std::vector<std::size_t> bidders;
    for (std::size_t t = begin; t < end; ++t) {
      CounterRng rng(seed, t);
      for (auto& v : values) v = inst.values_dist.quantile(rng.uniform_open());
      const auto out = detail::allocate(values, profile, inst.m, inst.values_dist, rng, bidders);
      acc.revenue.push(out.revenue);
      acc.welfare.push(out.welfare);
      acc.virtual_surplus.push(out.virtual_surplus);
      acc.difference.push(out.revenue - out.virtual_surplus);
    }
    return acc;
  };
  const auto acc = deterministic_reduce<Acc>(static_cast<std::size_t>(trials), threads, block);
  return {acc.revenue.estimate(), acc.welfare.estimate(), acc.virtual_surplus.estimate(),
          acc.difference.estimate()};
}

// ---------------------------------------------------------------------------
// Benchmarks
// ---------------------------------------------------------------------------

/// Optimal expected revenue: expected sum of the top-m positive virtual values.
inline double myerson_opt_revenue(const ValueDistribution& g, int n, int m) {
  const auto t = detail::regular_transform(g);
  return opt_offline(induced_reward_distribution(t, false), n, m);
}

/// Expected sum of the top-m values.
inline double max_welfare(const ValueDistribution& g, int n, int m) {
  const double lo = g.support_lo();
  return std::min(n, m) * lo + splus(g, n, m, lo);
}

}  // namespace kdpa
