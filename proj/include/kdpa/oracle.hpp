#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <utility>
#include <vector>

#include "kdpa/auction.hpp"
#include "kdpa/dist.hpp"
#include "kdpa/equilibrium.hpp"
#include "kdpa/error.hpp"
#include "kdpa/numeric.hpp"
#include "kdpa/parallel.hpp"
#include "kdpa/prophet.hpp"
#include "kdpa/random.hpp"

namespace kdpa {

struct Atom {
  double value;
  double probability;
};

/// Finite-support law: strictly increasing values, probabilities summing to 1.
class DiscreteDistribution {
 public:
  explicit DiscreteDistribution(std::vector<Atom> atoms) : atoms_(std::move(atoms)) {
    detail::require(!atoms_.empty(), ErrorCode::DomainError, "need at least one atom");
    double total = 0.0;
    for (std::size_t i = 0; i < atoms_.size(); ++i) {
      detail::require(atoms_[i].probability >= 0.0, ErrorCode::DomainError,
                      "atom probabilities must be non-negative");
      if (i > 0)
        detail::require(atoms_[i].value > atoms_[i - 1].value, ErrorCode::DomainError,
                        "atom values must be strictly increasing");
      total += atoms_[i].probability;
    }
    detail::require(std::abs(total - 1.0) <= 1e-12, ErrorCode::DomainError,
                    "atom probabilities must sum to 1");
  }

  const std::vector<Atom>& atoms() const { return atoms_; }
  std::size_t size() const { return atoms_.size(); }

  double mean() const {
    double s = 0.0;
    for (const auto& a : atoms_) s += a.value * a.probability;
    return s;
  }

  /// P(V < x).
  double cdf_below(double x) const {
    double s = 0.0;
    for (const auto& a : atoms_)
      if (a.value < x) s += a.probability;
    return s;
  }

  /// Inverse CDF usable for sampling: smallest atom whose cumulative mass reaches q.
  double quantile(double q) const {
    double s = 0.0;
    for (const auto& a : atoms_) {
      s += a.probability;
      if (q <= s) return a.value;
    }
    return atoms_.back().value;
  }

 private:
  std::vector<Atom> atoms_;
};

inline constexpr std::uint64_t kEnumerationLimit = 10'000'000;

namespace detail {

inline std::uint64_t profile_count(std::size_t atoms, int n) {
  require(n >= 1, ErrorCode::DomainError, "need n >= 1");
  std::uint64_t count = 1;
  for (int i = 0; i < n; ++i) {
    if (count > kEnumerationLimit / atoms)
      throw Error(ErrorCode::TooLarge, "enumeration exceeds 1e7 value profiles");
    count *= atoms;
  }
  return count;
}

inline void require_off_atoms(const DiscreteDistribution& d, const ThresholdPolicy& policy) {
  for (double t : policy.thresholds())
    for (const auto& a : d.atoms())
      if (std::abs(t - a.value) <= 1e-12 * std::max(1.0, std::abs(a.value)))
        throw Error(ErrorCode::ThresholdOnAtom, "threshold coincides with an atom");
}

struct SumAcc {
  double sum = 0.0;
  void merge(const SumAcc& o) { sum += o.sum; }
};

/// Visits every value profile with its probability. Profiles are numbered in
/// base |atoms| and reduced in fixed blocks, so the summation order is fixed.
template <class ProfileFn>
double enumerate_profiles(const DiscreteDistribution& d, int n, unsigned threads, ProfileFn&& fn) {
  const auto total = profile_count(d.size(), n);
  const auto& atoms = d.atoms();
  auto block = [&](std::size_t begin, std::size_t end) {
    SumAcc acc;
    std::vector<double> values(static_cast<std::size_t>(n));
    for (std::size_t index = begin; index < end; ++index) {
      std::size_t code = index;
      double prob = 1.0;
      for (int i = 0; i < n; ++i) {
        const auto& a = atoms[code % atoms.size()];
        code /= atoms.size();
        values[static_cast<std::size_t>(i)] = a.value;
        prob *= a.probability;
      }
      if (prob > 0.0) acc.sum += prob * fn(values);
    }
    return acc;
  };
  return deterministic_reduce<SumAcc>(static_cast<std::size_t>(total), threads, block).sum;
}

}  // namespace detail

/// Exact expected collected total of a threshold policy. When a round has
/// more passers than free units, every passer is collected with probability
/// units/passers, which fills the capacity and ends the game.
inline double exact_alg_enumeration(const DiscreteDistribution& d, int n, int m,
                                    const ThresholdPolicy& policy, unsigned threads = 1) {
  detail::require(m >= 1 && m <= n, ErrorCode::DomainError, "need 1 <= m <= n");
  detail::require(!policy.empty(), ErrorCode::DomainError, "policy needs at least one threshold");
  detail::profile_count(d.size(), n);
  detail::require_off_atoms(d, policy);
  return detail::enumerate_profiles(d, n, threads, [&](const std::vector<double>& values) {
    double upper = kInf;
    int remaining = m;
    double collected = 0.0;
    for (double tau : policy.thresholds()) {
      int count = 0;
      double sum = 0.0;
      for (double v : values) {
        if (v >= tau && v < upper) {
          ++count;
          sum += v;
        }
      }
      if (count <= remaining) {
        collected += sum;
        remaining -= count;
      } else {
        collected += sum * remaining / count;
        remaining = 0;
      }
      if (remaining == 0) break;
      upper = tau;
    }
    return collected;
  });
}

/// Exact expected sum of the top-m positive values.
inline double exact_opt_enumeration(const DiscreteDistribution& d, int n, int m,
                                    unsigned threads = 1) {
  detail::require(m >= 1 && m <= n, ErrorCode::DomainError, "need 1 <= m <= n");
  std::vector<double> sorted;
  return detail::enumerate_profiles(d, n, threads, [&](const std::vector<double>& values) {
    sorted = values;
    std::sort(sorted.begin(), sorted.end(), std::greater<>());
    double s = 0.0;
    for (int i = 0; i < m; ++i) s += std::max(0.0, sorted[static_cast<std::size_t>(i)]);
    return s;
  });
}

/// Single-unit stage decomposition on a discrete law:
/// sum_j (P(V < tau_{j-1})^n - P(V < tau_j)^n) E[V | V in [tau_j, tau_{j-1})].
inline double exact_alg_stagewise(const DiscreteDistribution& d, int n,
                                  const ThresholdPolicy& policy) {
  detail::require(n >= 1, ErrorCode::DomainError, "need n >= 1");
  detail::require(!policy.empty(), ErrorCode::DomainError, "policy needs at least one threshold");
  detail::require_off_atoms(d, policy);
  double total = 0.0;
  double upper = kInf;
  double below_upper = 1.0;
  for (double tau : policy.thresholds()) {
    const double below_tau = d.cdf_below(tau);
    double mass = 0.0;
    double weighted = 0.0;
    for (const auto& a : d.atoms()) {
      if (a.value >= tau && a.value < upper) {
        mass += a.probability;
        weighted += a.probability * a.value;
      }
    }
    if (mass > 0.0) total += (std::pow(below_upper, n) - std::pow(below_tau, n)) * weighted / mass;
    upper = tau;
    below_upper = below_tau;
  }
  return total;
}

/// Monte Carlo counterpart of exact_alg_enumeration, sampling the discrete law
/// with the same per-trial substreams as expected_reward_mc.
inline Estimate expected_reward_mc_discrete(const DiscreteDistribution& d, int n, int m,
                                            const ThresholdPolicy& policy, std::uint64_t trials,
                                            std::uint64_t seed, unsigned threads = 1) {
  detail::require(m >= 1 && m <= n, ErrorCode::DomainError, "need 1 <= m <= n");
  detail::require(trials >= 1, ErrorCode::DomainError, "need trials >= 1");
  detail::require(!policy.empty(), ErrorCode::DomainError, "policy needs at least one threshold");
  auto block = [&](std::size_t begin, std::size_t end) {
    RunningStats stats;
    std::vector<double> values(static_cast<std::size_t>(n));
    std::vector<std::size_t> pool;
    std::vector<std::size_t> passers;
    for (std::size_t t = begin; t < end; ++t) {
      CounterRng rng(seed, t);
      for (auto& v : values) v = d.quantile(rng.uniform_open());
      double total = 0.0;
      detail::play_rounds(values, policy, m, rng, pool, passers,
                          [&](int, const std::size_t* first, const std::size_t* last, bool) {
                            for (auto* it = first; it != last; ++it) total += values[*it];
                          });
      stats.push(total);
    }
    return stats;
  };
  return deterministic_reduce<RunningStats>(static_cast<std::size_t>(trials), threads, block)
      .estimate();
}

// ---------------------------------------------------------------------------
// Simulated deviation check
// ---------------------------------------------------------------------------

struct DeviationReport {
  /// max over values and actions of (estimated gain over the prescribed
  /// action - 3 standard errors); <= 0 means no detectable profitable deviation.
  double max_excess = 0.0;
  double worst_value = 0.0;
  std::size_t worst_action = 0;
  std::uint64_t trials = 0;

  bool passed() const { return max_excess <= 0.0; }
};

/// Fixes one buyer's value at `deviations` quantile-spaced points and
/// estimates the utility of stopping at every round against n-1 opponents
/// that follow the profile. Win probabilities given the opponents' bids are
/// computed exactly (including the tie share), and all values and actions
/// share the same opponent draws.
inline DeviationReport deviation_check_mc(const ValueDistribution& g, int n, int m,
                                          const EquilibriumProfile& profile, int deviations,
                                          std::uint64_t trials, std::uint64_t seed,
                                          unsigned threads = 1) {
  detail::require(n >= 2 && m >= 1 && m <= n, ErrorCode::DomainError, "need n >= 2, 1 <= m <= n");
  detail::require(deviations >= 1, ErrorCode::DomainError, "need deviations >= 1");
  detail::require(trials >= 10'000, ErrorCode::DomainError, "need at least 1e4 trials");
  const std::size_t k = profile.rounds();
  const std::size_t actions = k + 1;  // 0 = no bid

  struct Moments {
    std::size_t count = 0;
    std::vector<double> first;
    std::vector<double> second;  // actions x actions
    void merge(const Moments& o) {
      if (o.count == 0) return;
      if (count == 0) {
        *this = o;
        return;
      }
      count += o.count;
      for (std::size_t i = 0; i < first.size(); ++i) first[i] += o.first[i];
      for (std::size_t i = 0; i < second.size(); ++i) second[i] += o.second[i];
    }
  };

  auto block = [&](std::size_t begin, std::size_t end) {
    Moments mom;
    mom.first.assign(actions, 0.0);
    mom.second.assign(actions * actions, 0.0);
    std::vector<int> per_round(k + 1);
    std::vector<double> win(actions);
    for (std::size_t t = begin; t < end; ++t) {
      CounterRng rng(seed, t);
      std::fill(per_round.begin(), per_round.end(), 0);
      for (int i = 0; i < n - 1; ++i) ++per_round[bid_round(g.quantile(rng.uniform_open()), profile)];
      win[0] = 0.0;
      int earlier = 0;
      for (std::size_t j = 1; j <= k; ++j) {
        const int free_units = m - earlier;
        win[j] = free_units <= 0 ? 0.0
                                 : std::min(1.0, static_cast<double>(free_units) / (per_round[j] + 1));
        earlier += per_round[j];
      }
      ++mom.count;
      for (std::size_t a = 0; a < actions; ++a) {
        mom.first[a] += win[a];
        for (std::size_t b = 0; b < actions; ++b) mom.second[a * actions + b] += win[a] * win[b];
      }
    }
    return mom;
  };
  const auto mom = deterministic_reduce<Moments>(static_cast<std::size_t>(trials), threads, block);

  const double count = static_cast<double>(mom.count);
  std::vector<double> mean(actions);
  std::vector<double> cov(actions * actions);
  for (std::size_t a = 0; a < actions; ++a) mean[a] = mom.first[a] / count;
  for (std::size_t a = 0; a < actions; ++a)
    for (std::size_t b = 0; b < actions; ++b)
      cov[a * actions + b] =
          (mom.second[a * actions + b] - count * mean[a] * mean[b]) / (count - 1.0);

  const auto& p = profile.schedule.prices;
  auto margin = [&](std::size_t a, double v) { return a == 0 ? 0.0 : v - p[a - 1]; };

  DeviationReport report;
  report.trials = trials;
  report.max_excess = -kInf;
  for (int i = 0; i < deviations; ++i) {
    const double v = g.quantile((i + 0.5) / deviations);
    const std::size_t b = bid_round(v, profile);
    const double cb = margin(b, v);
    for (std::size_t a = 0; a < actions; ++a) {
      if (a == b) continue;
      const double ca = margin(a, v);
      const double gain = ca * mean[a] - cb * mean[b];
      const double var = ca * ca * cov[a * actions + a] + cb * cb * cov[b * actions + b] -
                         2.0 * ca * cb * cov[a * actions + b];
      const double excess = gain - 3.0 * std::sqrt(std::max(0.0, var) / count);
      if (excess > report.max_excess) {
        report.max_excess = excess;
        report.worst_value = v;
        report.worst_action = a;
      }
    }
  }
  return report;
}

}  // namespace kdpa
