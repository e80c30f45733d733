#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <utility>
#include <vector>

#include "kdpa/dist.hpp"
#include "kdpa/error.hpp"
#include "kdpa/numeric.hpp"
#include "kdpa/prophet.hpp"

namespace kdpa {

struct PriceSchedule {
  std::vector<double> prices;
  int n = 2;
  int m = 1;
};

/// Symmetric equilibrium of a k-level descending price auction: the buyer
/// with value in [tau_j, tau_{j-1}) stops at round j. quantiles[j] = G(tau_j)
/// with quantiles[0] = 1.
struct EquilibriumProfile {
  std::vector<double> thresholds;
  PriceSchedule schedule;
  std::vector<double> quantiles;

  std::size_t rounds() const { return thresholds.size(); }
  const std::vector<double>& prices() const { return schedule.prices; }
};

// ---------------------------------------------------------------------------
// Winning weights
// ---------------------------------------------------------------------------

/// Probability that a buyer stopping at round j (1-based) receives a unit,
/// when every other buyer follows the profile's quantiles.
///
/// With r opponents stopping earlier and l at the same round the buyer wins
/// with probability min(1, (m - r) / (l + 1)); for one unit this collapses to
/// sum_i beta_{j-1}^i beta_j^{n-1-i} / n.
inline double win_weight(const std::vector<double>& quantiles, int n, int m, std::size_t j) {
  const double prev = quantiles[j - 1];
  const double cur = quantiles[j];
  if (m == 1) return geometric_sum(prev, cur, n) / n;
  if (prev <= 0.0) return 0.0;
  const double x = std::clamp(cur / prev, 0.0, 1.0);
  const auto earlier = binomial_pmf_prefix(n - 1, 1.0 - prev, m - 1);
  double w = 0.0;
  for (int r = 0; r < static_cast<int>(earlier.size()); ++r)
    w += earlier[static_cast<std::size_t>(r)] * selection_polynomials(n - r, m - r, x).b;
  return w;
}

inline double allocation_weight(const EquilibriumProfile& profile, std::size_t j) {
  return win_weight(profile.quantiles, profile.schedule.n, profile.schedule.m, j);
}

/// Expected utility of stopping at round j with value v.
inline double round_utility(const EquilibriumProfile& profile, std::size_t j, double v) {
  return allocation_weight(profile, j) * (v - profile.schedule.prices[j - 1]);
}

/// Difference of the two sides of the indifference condition at the interior
/// threshold j (1 <= j <= k-1), in geometric-sum form.
inline double indifference_residual(const EquilibriumProfile& profile, std::size_t j) {
  detail::require(j >= 1 && j < profile.rounds(), ErrorCode::DomainError,
                  "indifference needs an interior round");
  const auto& b = profile.quantiles;
  const auto& p = profile.schedule.prices;
  const int n = profile.schedule.n;
  const double tau = profile.thresholds[j - 1];
  return geometric_sum(b[j - 1], b[j], n) * (tau - p[j - 1]) -
         geometric_sum(b[j], b[j + 1], n) * (tau - p[j]);
}

// ---------------------------------------------------------------------------
// Thresholds -> prices
// ---------------------------------------------------------------------------

namespace detail {

inline void require_decreasing(const std::vector<double>& xs, const char* what) {
  require(!xs.empty(), ErrorCode::DomainError, "need at least one round");
  for (std::size_t i = 1; i < xs.size(); ++i)
    if (!(xs[i] < xs[i - 1])) throw Error(ErrorCode::DomainError, std::string(what) + " must be strictly decreasing");
}

/// p_k = tau_k, then p_j = tau_j - W_{j+1} / W_j (tau_j - p_{j+1}).
inline EquilibriumProfile prices_from_quantiles(std::vector<double> thresholds,
                                                std::vector<double> quantiles, int n, int m) {
  const std::size_t k = thresholds.size();
  std::vector<double> weight(k + 1, 0.0);
  for (std::size_t j = 1; j <= k; ++j) weight[j] = win_weight(quantiles, n, m, j);
  std::vector<double> prices(k);
  prices[k - 1] = thresholds[k - 1];
  for (std::size_t j = k - 1; j >= 1; --j) {
    const double tau = thresholds[j - 1];
    prices[j - 1] = tau - weight[j + 1] / weight[j] * (tau - prices[j]);
  }
  EquilibriumProfile profile;
  profile.thresholds = std::move(thresholds);
  profile.quantiles = std::move(quantiles);
  profile.schedule = PriceSchedule{std::move(prices), n, m};
  return profile;
}

inline std::vector<double> quantiles_of(const ValueDistribution& g, const std::vector<double>& tau) {
  std::vector<double> beta(tau.size() + 1, 1.0);
  for (std::size_t j = 0; j < tau.size(); ++j) beta[j + 1] = g.cdf(tau[j]);
  return beta;
}

}  // namespace detail

/// Equilibrium-supporting prices for the given thresholds (one unit).
inline EquilibriumProfile thresholds_to_prices(const ValueDistribution& g, int n,
                                               const std::vector<double>& thresholds) {
  detail::require_decreasing(thresholds, "thresholds");
  detail::require(thresholds.back() > 0.0, ErrorCode::DomainError, "thresholds must be positive");
  if (n == 1)
    throw Error(ErrorCode::DegenerateCompetition,
                "a single buyer makes every indifference price equal");
  detail::require(n >= 2, ErrorCode::DomainError, "need n >= 2");
  return detail::prices_from_quantiles(thresholds, detail::quantiles_of(g, thresholds), n, 1);
}

/// Equilibrium-supporting prices for m units, 1 <= m < n, with p_k = tau_k.
inline EquilibriumProfile thresholds_to_prices_multi(const ValueDistribution& g, int n, int m,
                                                     const std::vector<double>& thresholds) {
  detail::require_decreasing(thresholds, "thresholds");
  detail::require(thresholds.back() > 0.0, ErrorCode::DomainError, "thresholds must be positive");
  if (n == 1)
    throw Error(ErrorCode::DegenerateCompetition,
                "a single buyer makes every indifference price equal");
  detail::require(m >= 1 && m < n, ErrorCode::DomainError, "need 1 <= m < n");
  return detail::prices_from_quantiles(thresholds, detail::quantiles_of(g, thresholds), n, m);
}

// ---------------------------------------------------------------------------
// Prices -> thresholds (one unit)
// ---------------------------------------------------------------------------

/// Solves the indifference system for the thresholds supporting `schedule`.
///
/// Shooting on beta_1 = G(tau_1) in (G(p_1), 1): each guess determines
/// beta_2, ..., beta_k by successive one-dimensional solves, and the guess is
/// bisected until tau_k = p_k.
/// Largest terminal miss accepted once the shooting bracket has collapsed.
inline constexpr double kShootingSlack = 1e-6;
/// Grid points scanned in beta1 before bisection.
inline constexpr int kShootingScan = 512;

inline EquilibriumProfile prices_to_thresholds(const ValueDistribution& g,
                                               const PriceSchedule& schedule) {
  const auto& p = schedule.prices;
  const int n = schedule.n;
  detail::require_decreasing(p, "prices");
  detail::require(n >= 2, ErrorCode::DomainError, "need n >= 2");
  detail::require(schedule.m == 1, ErrorCode::DomainError,
                  "price to threshold map is available for one unit only");
  const std::size_t k = p.size();

  if (k == 1) {
    EquilibriumProfile profile;
    profile.thresholds = {p[0]};
    profile.quantiles = {1.0, g.cdf(p[0])};
    profile.schedule = schedule;
    return profile;
  }

  const double target_beta = g.cdf(p[k - 1]);
  std::vector<double> beta(k + 1, 1.0);
  std::vector<double> tau(k);

  // Signed terminal miss for a guess; -inf when a later threshold would fall
  // below the support or its price, +inf when it would rise above its predecessor.
  auto shoot = [&](double beta1) {
    beta[1] = beta1;
    tau[0] = g.quantile(beta1);
    for (std::size_t j = 1; j < k; ++j) {
      const double t = tau[j - 1];
      if (!(t > p[j])) return -kInf;
      const double target = geometric_sum(beta[j - 1], beta[j], n) * (t - p[j - 1]) / (t - p[j]);
      const double floor_value = geometric_sum(beta[j], 0.0, n);
      const double ceil_value = geometric_sum(beta[j], beta[j], n);
      if (target < floor_value) return -kInf;
      if (target > ceil_value) return kInf;
      const double b = beta[j];
      beta[j + 1] = bisect_increasing([&](double y) { return geometric_sum(b, y, n); }, target, 0.0,
                                      b, 0.0, 200);
      tau[j] = g.quantile(beta[j + 1]);
    }
    return tau[k - 1] - p[k - 1];
  };

  // The miss is piecewise continuous in beta1 and the completing pieces can be
  // very narrow: scan, refine the piece edges, then try every sign change.
  const double lo = g.cdf(p[0]);
  const double hi = std::isfinite(g.support_hi()) ? 1.0 : std::nextafter(1.0, 0.0);
  std::vector<std::pair<double, double>> samples;
  for (int i = 0; i <= kShootingScan; ++i) {
    const double b = i == kShootingScan ? hi : lo + (hi - lo) * i / kShootingScan;
    samples.emplace_back(b, shoot(b));
  }
  const std::size_t grid_points = samples.size();
  for (std::size_t i = 0; i + 1 < grid_points; ++i) {
    double good = samples[i].first;
    double bad = samples[i + 1].first;
    if (std::isfinite(samples[i].second) == std::isfinite(samples[i + 1].second)) continue;
    if (!std::isfinite(samples[i].second)) std::swap(good, bad);
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (good + bad);
      if (mid == good || mid == bad) break;
      (std::isfinite(shoot(mid)) ? good : bad) = mid;
    }
    samples.emplace_back(good, shoot(good));
  }
  std::sort(samples.begin(), samples.end());

  double best_miss = kInf;
  double solution = kInf;
  for (std::size_t i = 0; i + 1 < samples.size() && !std::isfinite(solution); ++i) {
    double a = samples[i].first;
    double b = samples[i + 1].first;
    const double fa = samples[i].second;
    const double fb = samples[i + 1].second;
    if (!((fa <= 0.0 && fb >= 0.0) || (fa >= 0.0 && fb <= 0.0))) continue;
    const bool rising = fa <= 0.0;
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (a + b);
      if (mid <= a || mid >= b) break;
      ((shoot(mid) < 0.0) == rising ? a : b) = mid;
    }
    // a and b are now neighbouring doubles; an infinite end means the chain broke there
    const double end_a = shoot(a);
    const double end_b = shoot(b);
    if (!std::isfinite(end_a) || !std::isfinite(end_b)) continue;
    const double closer = std::abs(end_a) <= std::abs(end_b) ? a : b;
    const double miss = std::min(std::abs(end_a), std::abs(end_b));
    best_miss = std::min(best_miss, miss);
    if (miss <= kShootingSlack) solution = closer;
  }
  if (!std::isfinite(solution)) {
    std::ostringstream msg;
    msg << "shooting found no completing chain meeting the terminal price (closest miss "
        << best_miss << ")";
    throw Error(ErrorCode::NoBracket, msg.str());
  }
  shoot(solution);
  for (std::size_t j = 1; j < k; ++j) {
    if (!(tau[j] < tau[j - 1] - 1e-12))
      throw Error(ErrorCode::NonMinimal, "two equilibrium thresholds coincide");
  }
  tau[k - 1] = p[k - 1];
  beta[k] = target_beta;

  EquilibriumProfile profile;
  profile.thresholds = tau;
  profile.quantiles = beta;
  profile.schedule = schedule;
  return profile;
}

// ---------------------------------------------------------------------------
// Bidding and audits
// ---------------------------------------------------------------------------

/// 1-based round at which a buyer with this value stops, 0 for no bid.
inline std::size_t bid_round(double value, const EquilibriumProfile& profile) {
  const auto& tau = profile.thresholds;
  for (std::size_t j = 0; j < tau.size(); ++j)
    if (value >= tau[j]) return j + 1;
  return 0;
}

inline double bid_of(double value, const EquilibriumProfile& profile) {
  const auto j = bid_round(value, profile);
  return j == 0 ? 0.0 : profile.schedule.prices[j - 1];
}

struct AuditReport {
  /// Largest utility gain of any round (or not bidding) over the prescribed
  /// action across the value grid.
  double max_gain = 0.0;
  double worst_value = 0.0;
  std::size_t worst_round = 0;
  /// Largest |U_j(tau_j) - U_{j+1}(tau_j)| over interior thresholds.
  double max_indifference_gap = 0.0;

  bool passed(double tol = 1e-8) const { return max_gain <= tol && max_indifference_gap <= tol; }
};

/// Closed-form best-response check on `value_grid` quantile-spaced values
/// plus the thresholds themselves.
inline AuditReport best_response_audit(const ValueDistribution& g, const EquilibriumProfile& profile,
                                       int value_grid) {
  detail::require(value_grid >= 1, ErrorCode::DomainError, "need a non-empty value grid");
  const std::size_t k = profile.rounds();
  std::vector<double> weight(k + 1, 0.0);
  for (std::size_t j = 1; j <= k; ++j) weight[j] = allocation_weight(profile, j);
  const auto& p = profile.schedule.prices;
  auto utility = [&](std::size_t j, double v) { return j == 0 ? 0.0 : weight[j] * (v - p[j - 1]); };

  std::vector<double> values;
  values.reserve(static_cast<std::size_t>(value_grid) + k);
  for (int i = 0; i < value_grid; ++i)
    values.push_back(g.quantile((i + 0.5) / value_grid));
  for (double t : profile.thresholds) values.push_back(t);

  AuditReport report;
  for (double v : values) {
    const std::size_t prescribed = bid_round(v, profile);
    const double base = utility(prescribed, v);
    for (std::size_t j = 0; j <= k; ++j) {
      const double gain = utility(j, v) - base;
      if (gain > report.max_gain) {
        report.max_gain = gain;
        report.worst_value = v;
        report.worst_round = j;
      }
    }
  }
  for (std::size_t j = 1; j < k; ++j) {
    const double t = profile.thresholds[j - 1];
    report.max_indifference_gap =
        std::max(report.max_indifference_gap, std::abs(utility(j, t) - utility(j + 1, t)));
  }
  return report;
}

}  // namespace kdpa
