#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "kdpa/dist.hpp"
#include "kdpa/error.hpp"
#include "kdpa/numeric.hpp"
#include "kdpa/parallel.hpp"
#include "kdpa/random.hpp"

namespace kdpa {

// ---------------------------------------------------------------------------
// Domain types
// ---------------------------------------------------------------------------

/// Strictly decreasing thresholds tau_1 > ... > tau_k.
class ThresholdPolicy {
 public:
  ThresholdPolicy() = default;
  explicit ThresholdPolicy(std::vector<double> thresholds) : thresholds_(std::move(thresholds)) {
    for (std::size_t i = 0; i < thresholds_.size(); ++i) {
      detail::require(!std::isnan(thresholds_[i]), ErrorCode::DomainError, "threshold is NaN");
      if (i > 0)
        detail::require(thresholds_[i] < thresholds_[i - 1], ErrorCode::DomainError,
                        "thresholds must be strictly decreasing");
    }
  }

  const std::vector<double>& thresholds() const { return thresholds_; }
  std::size_t size() const { return thresholds_.size(); }
  bool empty() const { return thresholds_.empty(); }
  double operator[](std::size_t i) const { return thresholds_[i]; }
  double last() const { return thresholds_.back(); }

 private:
  std::vector<double> thresholds_;
};

struct ProphetInstance {
  RewardDistribution reward_dist;
  int n = 1;
  int m = 1;
  /// Instance size from which asymptotic guarantees are expected to hold;
  /// carried as configuration only.
  int min_n_for_asymptotics = 0;

  void validate() const {
    detail::require(n >= 1, ErrorCode::DomainError, "need n >= 1");
    detail::require(m >= 1 && m <= n, ErrorCode::DomainError, "need 1 <= m <= n");
  }
};

struct StageOutcome {
  int round = 0;
  std::vector<double> collected;
  bool game_over = false;
};

struct DPSolution {
  double value = 0.0;
  ThresholdPolicy thresholds;
  int grid_size = 0;
  /// Largest gap between the conditional means of adjacent grid cells.
  double grid_error = 0.0;
  /// Optimal value with t = 0..k rounds from the unrestricted state.
  std::vector<double> value_by_rounds;
  /// Exact value of the extracted thresholds.
  double policy_value = 0.0;
};

// ---------------------------------------------------------------------------
// Bound polynomials and guarantees
// ---------------------------------------------------------------------------

namespace detail {
inline void require_probability(double x) {
  require(x >= 0.0 && x <= 1.0, ErrorCode::DomainError, "argument must lie in [0,1]");
}
}  // namespace detail

/// P_n(x) = (1 - x^n) / (n (1 - x)), with P_n(1) = 1.
inline double p_polynomial(int n, double x) {
  detail::require(n >= 1, ErrorCode::DomainError, "need n >= 1");
  detail::require_probability(x);
  if (x == 1.0) return 1.0;
  if (x == 0.0) return 1.0 / n;
  return -std::expm1(n * std::log(x)) / (n * (1.0 - x));
}

struct SelectionPolynomials {
  double a;
  double b;
};

/// A(n,m,x) = (1/m) sum_i C(n,i) x^{n-i} (1-x)^i min(i,m) and
/// B(n,m,x) = sum_i C(n-1,i) x^{n-1-i} (1-x)^i min(1, m/(i+1)),
/// both as sums of non-negative terms.
inline SelectionPolynomials selection_polynomials(int n, int m, double x) {
  detail::require(n >= 1 && m >= 1, ErrorCode::DomainError, "need n >= 1 and m >= 1");
  detail::require_probability(x);
  const double p = 1.0 - x;
  const auto pmf_n = binomial_pmf_prefix(n, p, n);
  double a = 0.0;
  for (int i = 1; i <= n; ++i) a += pmf_n[static_cast<std::size_t>(i)] * std::min(i, m);
  a /= m;
  const auto pmf_b = binomial_pmf_prefix(n - 1, p, n - 1);
  double b = 0.0;
  for (int i = 0; i <= n - 1; ++i)
    b += pmf_b[static_cast<std::size_t>(i)] * std::min(1.0, static_cast<double>(m) / (i + 1));
  return {a, b};
}

inline double guarantee_single(int k) {
  detail::require(k >= 1, ErrorCode::DomainError, "need k >= 1");
  return -std::expm1(-static_cast<double>(k));
}

namespace detail {
// 1 - e^{-j} j^j / j!
inline double single_threshold_share(int j) {
  return -std::expm1(-j + j * std::log(static_cast<double>(j)) - std::lgamma(j + 1.0));
}
}  // namespace detail

/// Limit bound for m units and k balanced rounds (no finite-n deflation).
inline double guarantee_multi(int k, int m) {
  detail::require(k >= 1 && m >= 1, ErrorCode::DomainError, "need k >= 1 and m >= 1");
  double total = detail::single_threshold_share(m);
  for (int r = 1; r <= k - 1; ++r) {
    const double mr = static_cast<double>(m) * r;
    for (int i = 0; i <= m - 1; ++i) {
      const double poisson = std::exp(i * std::log(mr) - std::lgamma(i + 1.0) - mr);
      total += poisson * detail::single_threshold_share(m - i);
    }
  }
  return total;
}

// ---------------------------------------------------------------------------
// Balanced thresholds
// ---------------------------------------------------------------------------

/// tau_j = F^{-1}(e^{-j/n}), j = 1..k.
inline ThresholdPolicy balanced_thresholds_single(const RewardDistribution& f, int n, int k) {
  detail::require(n >= 1 && k >= 1, ErrorCode::DomainError, "need n >= 1 and k >= 1");
  std::vector<double> tau(static_cast<std::size_t>(k));
  for (int j = 1; j <= k; ++j)
    tau[static_cast<std::size_t>(j - 1)] = f.quantile(std::exp(-static_cast<double>(j) / n));
  return ThresholdPolicy(std::move(tau));
}

/// tau_r = F^{-1}((1 - m/n)^r), r = 1..k.
inline ThresholdPolicy balanced_thresholds_multi(const RewardDistribution& f, int n, int m, int k) {
  detail::require(k >= 1 && m >= 1, ErrorCode::DomainError, "need k >= 1 and m >= 1");
  detail::require(m < n, ErrorCode::DomainError, "need m < n");
  const double base = 1.0 - static_cast<double>(m) / n;
  std::vector<double> tau(static_cast<std::size_t>(k));
  for (int r = 1; r <= k; ++r)
    tau[static_cast<std::size_t>(r - 1)] = f.quantile(std::pow(base, r));
  return ThresholdPolicy(std::move(tau));
}

// ---------------------------------------------------------------------------
// Offline benchmarks
// ---------------------------------------------------------------------------

/// Sum over the top m of E[(V_(i) - tau)^+], as the integral over z > tau of
/// E[min(N_z, m)] with N_z ~ Binomial(n, 1 - F(z)).
inline double splus(const RewardDistribution& f, int n, int m, double tau) {
  detail::require(n >= 1 && m >= 1 && m <= n, ErrorCode::DomainError, "need 1 <= m <= n");
  const double lo = f.support_lo();
  const double hi = f.integration_cap(kTailMass / n);
  if (tau >= hi) return 0.0;
  double total = 0.0;
  double start = tau;
  if (tau < lo) {
    total += (lo - tau) * std::min(n, m);
    start = lo;
  }
  auto integrand = [&](double z) { return expected_min_binomial(n, 1.0 - f.cdf(z), m); };

  // Split where the integrand moves: near the quantiles with O(m) expected
  // exceedances out of n.
  std::vector<double> cuts{start};
  const double u_start = f.cdf(start);
  for (double c : {64.0, 16.0, 4.0, 2.0, 1.0, 0.5, 0.25, 0.0625}) {
    const double u = 1.0 - c * m / n;
    if (u <= u_start || u >= 1.0) continue;
    const double z = f.quantile(u);
    if (z > cuts.back() && z < hi) cuts.push_back(z);
  }
  cuts.push_back(hi);
  QuadratureOptions opt;
  opt.abs_tol = 1e-10 / static_cast<double>(cuts.size());
  for (std::size_t i = 1; i < cuts.size(); ++i) total += integrate(integrand, cuts[i - 1], cuts[i], opt);
  return total;
}

/// Expected sum of the top-m positive rewards.
inline double opt_offline(const RewardDistribution& f, int n, int m) { return splus(f, n, m, 0.0); }

// ---------------------------------------------------------------------------
// Exact single-item evaluation
// ---------------------------------------------------------------------------

/// sum_j (F(tau_{j-1})^n - F(tau_j)^n) E[V | V in [tau_j, tau_{j-1})], tau_0 = sup.
inline double exact_alg_single(const RewardDistribution& f, int n, const ThresholdPolicy& policy) {
  detail::require(n >= 1, ErrorCode::DomainError, "need n >= 1");
  detail::require(!policy.empty(), ErrorCode::DomainError, "policy needs at least one threshold");
  detail::require(policy.last() >= 0.0, ErrorCode::DomainError, "last threshold must be >= 0");
  double total = 0.0;
  double upper = f.support_hi();
  double f_upper = 1.0;
  for (std::size_t j = 0; j < policy.size(); ++j) {
    const double tau = policy[j];
    const double f_tau = f.cdf(tau);
    if (tau < upper && f_upper - f_tau > 1e-12) {
      const double weight = std::pow(f_upper, n) - std::pow(f_tau, n);
      total += weight * conditional_mean(f, tau, upper);
    }
    upper = std::min(upper, tau);
    f_upper = f_tau;
  }
  return total;
}

// ---------------------------------------------------------------------------
// Simulation
// ---------------------------------------------------------------------------

namespace detail {

/// Replays the rounds of a policy on realised rewards. `on_stage(round,
/// first, last, game_over)` receives each round's collected indices as a
/// range of `scratch`.
template <class OnStage>
void play_rounds(std::span<const double> rewards, const ThresholdPolicy& policy, int m,
                 CounterRng& rng, std::vector<std::size_t>& pool, std::vector<std::size_t>& passers,
                 OnStage&& on_stage) {
  pool.resize(rewards.size());
  for (std::size_t i = 0; i < pool.size(); ++i) pool[i] = i;
  std::size_t remaining = static_cast<std::size_t>(m);
  for (std::size_t r = 0; r < policy.size(); ++r) {
    const double tau = policy[r];
    passers.clear();
    std::size_t keep = 0;
    for (std::size_t idx : pool) {
      if (rewards[idx] >= tau)
        passers.push_back(idx);
      else
        pool[keep++] = idx;
    }
    pool.resize(keep);
    const std::size_t take = std::min(remaining, passers.size());
    if (take < passers.size()) sample_front(std::span<std::size_t>(passers), take, rng);
    remaining -= take;
    const bool over = remaining == 0 || r + 1 == policy.size();
    on_stage(static_cast<int>(r + 1), passers.data(), passers.data() + take, over);
    if (over) return;
  }
}

}  // namespace detail

/// Plays a policy on the given realised rewards.
inline std::vector<StageOutcome> run_policy(std::span<const double> rewards,
                                            const ThresholdPolicy& policy, int m,
                                            CounterRng& rng) {
  detail::require(!policy.empty(), ErrorCode::DomainError, "policy needs at least one threshold");
  detail::require(m >= 1, ErrorCode::DomainError, "need m >= 1");
  std::vector<StageOutcome> stages;
  std::vector<std::size_t> pool;
  std::vector<std::size_t> passers;
  detail::play_rounds(rewards, policy, m, rng, pool, passers,
                      [&](int round, const std::size_t* first, const std::size_t* last, bool over) {
                        StageOutcome s;
                        s.round = round;
                        for (auto* it = first; it != last; ++it) s.collected.push_back(rewards[*it]);
                        s.game_over = over;
                        stages.push_back(std::move(s));
                      });
  return stages;
}

namespace detail {
inline void draw_rewards(const RewardDistribution& f, std::vector<double>& out, std::size_t n,
                         CounterRng& rng) {
  out.resize(n);
  for (auto& v : out) v = f.quantile(rng.uniform_open());
}
}  // namespace detail

/// Draws all n rewards once, then replays the rounds.
inline std::vector<StageOutcome> simulate_policy(const ProphetInstance& inst,
                                                 const ThresholdPolicy& policy, CounterRng& rng) {
  inst.validate();
  std::vector<double> rewards;
  detail::draw_rewards(inst.reward_dist, rewards, static_cast<std::size_t>(inst.n), rng);
  return run_policy(rewards, policy, inst.m, rng);
}

/// Mean and standard error of the collected total over `trials` runs. Trial t
/// uses the substream (seed, t), so the result does not depend on `threads`.
inline Estimate expected_reward_mc(const ProphetInstance& inst, const ThresholdPolicy& policy,
                                   std::uint64_t trials, std::uint64_t seed, unsigned threads = 1) {
  inst.validate();
  detail::require(trials >= 1, ErrorCode::DomainError, "need trials >= 1");
  detail::require(!policy.empty(), ErrorCode::DomainError, "policy needs at least one threshold");
  auto block = [&](std::size_t begin, std::size_t end) {
    RunningStats stats;
    std::vector<double> rewards;
    std::vector<std::size_t> pool;
    std::vector<std::size_t> passers;
    for (std::size_t t = begin; t < end; ++t) {
      CounterRng rng(seed, t);
      detail::draw_rewards(inst.reward_dist, rewards, static_cast<std::size_t>(inst.n), rng);
      double total = 0.0;
      detail::play_rounds(rewards, policy, inst.m, rng, pool, passers,
                          [&](int, const std::size_t* first, const std::size_t* last, bool) {
                            for (auto* it = first; it != last; ++it) total += rewards[*it];
                          });
      stats.push(total);
    }
    return stats;
  };
  return deterministic_reduce<RunningStats>(static_cast<std::size_t>(trials), threads, block)
      .estimate();
}

// ---------------------------------------------------------------------------
// Multi-unit closed-form expression
// ---------------------------------------------------------------------------

/// Round-by-round expression m tau_r A(.) + S+(tau_r) B(.), where round r >= 2
/// is weighted by the probability that i < m rewards exceed tau_{r-1}, and A, B
/// are evaluated on the n - i remaining rewards with m - i free units and
/// x = F(tau_r) / F(tau_{r-1}).
inline double alg_lower_bound_multi(const ProphetInstance& inst, const ThresholdPolicy& policy) {
  inst.validate();
  detail::require(!policy.empty(), ErrorCode::DomainError, "policy needs at least one threshold");
  const auto& f = inst.reward_dist;
  const int n = inst.n;
  const int m = inst.m;
  auto round_term = [&](int rewards_left, int units_left, double x, double tau, double s_plus) {
    const auto poly = selection_polynomials(rewards_left, units_left, x);
    return m * tau * poly.a + s_plus * poly.b;
  };

  const double f1 = f.cdf(policy[0]);
  double total = round_term(n, m, f1, policy[0], splus(f, n, m, policy[0]));
  for (std::size_t r = 1; r < policy.size(); ++r) {
    const double f_prev = f.cdf(policy[r - 1]);
    if (f_prev <= 0.0) break;
    const double x = std::clamp(f.cdf(policy[r]) / f_prev, 0.0, 1.0);
    const double s_plus = splus(f, n, m, policy[r]);
    const auto weights = binomial_pmf_prefix(n, 1.0 - f_prev, m - 1);
    for (int i = 0; i < static_cast<int>(weights.size()); ++i) {
      total += weights[static_cast<std::size_t>(i)] * round_term(n - i, m - i, x, policy[r], s_plus);
    }
  }
  return total;
}

// ---------------------------------------------------------------------------
// Dynamic programming over thresholds (single item)
// ---------------------------------------------------------------------------

/// Psi(t, theta) = max over theta' <= theta of
///   (F(theta')/F(theta))^n Psi(t-1, theta') + (1 - (F(theta')/F(theta))^n) E[V | V in [theta', theta)]
/// on a grid of `grid` equal-mass cells between F(0) and 1, with Psi(0, .) = 0.
/// The grid maximiser of every state is refined by a golden-section search
/// over its neighbouring cells.
inline DPSolution dp_solve(const RewardDistribution& f, int n, int k, int grid, int m = 1) {
  detail::require(m == 1, ErrorCode::DomainError, "dynamic programming supports a single item only");
  detail::require(n >= 1 && k >= 0, ErrorCode::DomainError, "need n >= 1 and k >= 0");
  detail::require(grid >= 16, ErrorCode::DomainError, "need grid >= 16");

  DPSolution sol;
  sol.grid_size = grid;
  sol.value_by_rounds.assign(1, 0.0);
  if (k == 0) return sol;

  const double u_min = f.cdf(0.0);
  const auto cells = static_cast<std::size_t>(grid);
  std::vector<double> u(cells + 1);
  std::vector<double> theta(cells + 1);
  for (std::size_t i = 0; i <= cells; ++i) {
    u[i] = (i == cells) ? 1.0 : u_min + (1.0 - u_min) * static_cast<double>(i) / grid;
    theta[i] = std::max(0.0, f.quantile(u[i]));
  }
  theta[cells] = f.support_hi();

  // cumulative[i] = integral of F^{-1} over quantiles [u_min, u_i]
  std::vector<double> cell_mean(cells);
  std::vector<double> cumulative(cells + 1, 0.0);
  for (std::size_t c = 0; c < cells; ++c) {
    cell_mean[c] = conditional_mean(f, theta[c], theta[c + 1]);
    cumulative[c + 1] = cumulative[c] + (u[c + 1] - u[c]) * cell_mean[c];
  }
  for (std::size_t c = 1; c < cells; ++c)
    sol.grid_error = std::max(sol.grid_error, cell_mean[c] - cell_mean[c - 1]);

  std::vector<double> log_u(cells + 1);
  for (std::size_t i = 0; i <= cells; ++i) log_u[i] = u[i] > 0.0 ? std::log(u[i]) : -kInf;

  // Integral of F^{-1} over [u_min, q] for off-grid q.
  auto cumulative_at = [&](double q) {
    const double pos = (q - u_min) / (1.0 - u_min) * grid;
    auto c = static_cast<std::size_t>(std::clamp(std::floor(pos), 0.0, static_cast<double>(cells - 1)));
    const double a = u[c];
    const double b = std::min(q, u[c + 1]);
    if (b <= a) return cumulative[c];
    const double mid = 0.5 * (a + b);
    auto qf = [&](double level) { return std::max(0.0, f.quantile(std::min(level, 1.0 - 1e-15))); };
    return cumulative[c] + (b - a) / 6.0 * (qf(a) + 4.0 * qf(mid) + qf(b));
  };

  std::vector<double> prev(cells + 1, 0.0);
  std::vector<double> cur(cells + 1, 0.0);
  std::vector<std::vector<std::size_t>> choice(static_cast<std::size_t>(k),
                                               std::vector<std::size_t>(cells + 1, 0));

  for (int t = 1; t <= k; ++t) {
    auto& pick = choice[static_cast<std::size_t>(t - 1)];
    auto interp_prev = [&](double q) {
      const double pos = std::clamp((q - u_min) / (1.0 - u_min) * grid, 0.0, static_cast<double>(grid));
      const auto c = static_cast<std::size_t>(std::min(std::floor(pos), static_cast<double>(cells - 1)));
      const double w = pos - static_cast<double>(c);
      return (1.0 - w) * prev[c] + w * prev[c + 1];
    };
    cur[0] = 0.0;
    for (std::size_t i = 1; i <= cells; ++i) {
      if (u[i] <= 0.0) {
        cur[i] = 0.0;
        continue;
      }
      double best = -kInf;
      std::size_t best_j = 0;
      for (std::size_t j = 0; j < i; ++j) {
        const double w = u[j] > 0.0 ? std::exp(n * (log_u[j] - log_u[i])) : 0.0;
        const double mass = u[i] - u[j];
        const double mean = (cumulative[i] - cumulative[j]) / mass;
        const double value = w * prev[j] + (1.0 - w) * mean;
        if (value > best) {
          best = value;
          best_j = j;
        }
      }
      pick[i] = best_j;

      const double lo_q = u[best_j > 0 ? best_j - 1 : 0];
      const double hi_q = u[std::min(best_j + 1, i - 1)];
      if (hi_q > lo_q) {
        const double ui = u[i];
        auto objective = [&](double q) {
          const double w = q > 0.0 ? std::pow(q / ui, n) : 0.0;
          const double mean = (cumulative[i] - cumulative_at(q)) / (ui - q);
          return w * interp_prev(q) + (1.0 - w) * mean;
        };
        const auto refined = golden_section_max(objective, lo_q, hi_q, 1e-10 * (1.0 - u_min), 100);
        best = std::max(best, refined.value);
      }
      // the round may also be skipped
      cur[i] = std::max(best, prev[i]);
    }
    sol.value_by_rounds.push_back(cur[cells]);
    std::swap(prev, cur);
  }
  sol.value = sol.value_by_rounds.back();

  std::vector<double> tau;
  std::size_t state = cells;
  for (int t = k; t >= 1 && state > 0; --t) {
    const std::size_t next = choice[static_cast<std::size_t>(t - 1)][state];
    tau.push_back(theta[next]);
    state = next;
  }
  sol.thresholds = ThresholdPolicy(std::move(tau));
  sol.policy_value = exact_alg_single(f, n, sol.thresholds);
  return sol;
}

}  // namespace kdpa
