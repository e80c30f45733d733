#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "kdpa/kdpa.hpp"
#include "log.hpp"

namespace kdpa::cli {

using nlohmann::json;

enum class Objective { Revenue, Welfare, Prophet, Both };

inline std::string to_string(Objective o) {
  switch (o) {
    case Objective::Revenue: return "revenue";
    case Objective::Welfare: return "welfare";
    case Objective::Prophet: return "prophet";
    case Objective::Both: return "both";
  }
  return "unknown";
}

inline Objective parse_objective(const std::string& s) {
  if (s == "revenue") return Objective::Revenue;
  if (s == "welfare") return Objective::Welfare;
  if (s == "prophet") return Objective::Prophet;
  if (s == "both") return Objective::Both;
  throw Error(ErrorCode::ParseError, "objective must be revenue, welfare, prophet or both");
}

struct ExperimentConfig {
  std::string dist_spec = "uniform:0,1";
  int n = 10;
  int m = 1;
  int k = 5;
  Objective objective = Objective::Revenue;
  std::uint64_t trials = 100000;
  std::uint64_t seed = 1;
  double epsilon = 0.05;
  int grid = 2000;
  unsigned threads = 1;
  std::vector<double> thresholds;
  std::vector<double> prices;

  void validate() const {
    detail::require(n >= 1 && m >= 1 && k >= 1, ErrorCode::DomainError,
                    "n, m and k must be positive");
    detail::require(m <= n, ErrorCode::DomainError, "m must not exceed n");
    detail::require(trials >= 1, ErrorCode::DomainError, "trials must be positive");
    detail::require(epsilon >= 0.0 && std::isfinite(epsilon), ErrorCode::DomainError,
                    "epsilon must be a non-negative number");
  }
};

namespace detail {

inline json estimate_json(const Estimate& e) { return {{"mean", e.mean}, {"std_error", e.std_error}}; }

inline json base_report(const std::string& command, const ExperimentConfig& c) {
  json inputs = {{"dist", c.dist_spec}, {"n", c.n},           {"m", c.m},
                 {"k", c.k},            {"objective", to_string(c.objective)},
                 {"trials", c.trials},  {"seed", c.seed},     {"epsilon", c.epsilon},
                 {"grid", c.grid}};
  return {{"command", command},
          {"inputs", inputs},
          {"thresholds", json::array()},
          {"prices", nullptr},
          {"reserve", nullptr},
          {"estimates", json::object()},
          {"benchmarks", json::object()},
          {"ratios", json::object()},
          {"guarantees", json::object()},
          {"pass", json::object()}};
}

inline json ratio_json(double value, double std_error, const std::string& benchmark) {
  return {{"value", value}, {"std_error", std_error}, {"benchmark", benchmark}};
}

/// Auction profile for an objective: revenue (one unit) or welfare.
inline EquilibriumProfile auction_profile(const ValueDistribution& g, const ExperimentConfig& c,
                                          Objective objective) {
  if (objective == Objective::Revenue) {
    kdpa::detail::require(c.m == 1, ErrorCode::DomainError,
                          "the revenue schedule is defined for a single unit");
    return revenue_prices(g, c.n, c.k);
  }
  if (c.m == 1) return welfare_prices(g, c.n, c.k);
  const auto tau = balanced_thresholds_multi(g, c.n, c.m, c.k);
  return thresholds_to_prices_multi(g, c.n, c.m, tau.thresholds());
}

inline ThresholdPolicy prophet_policy(const RewardDistribution& f, const ExperimentConfig& c) {
  return c.m == 1 ? balanced_thresholds_single(f, c.n, c.k)
                  : balanced_thresholds_multi(f, c.n, c.m, c.k);
}

}  // namespace detail

inline json cmd_thresholds(const ExperimentConfig& c) {
  c.validate();
  const auto dist = parse_distribution_spec(c.dist_spec);
  json report = detail::base_report("thresholds", c);
  if (c.objective == Objective::Prophet) {
    report["thresholds"] = detail::prophet_policy(dist, c).thresholds();
    return report;
  }
  kdpa::detail::require(c.objective != Objective::Both, ErrorCode::DomainError,
                        "objective 'both' is only available for trajectory output");
  const auto profile = detail::auction_profile(dist, c, c.objective);
  report["thresholds"] = profile.thresholds;
  report["prices"] = profile.schedule.prices;
  if (c.objective == Objective::Revenue) report["reserve"] = VirtualValueTransform(dist).reserve();
  return report;
}

inline json cmd_prices(const ExperimentConfig& c) {
  c.validate();
  const auto dist = parse_distribution_spec(c.dist_spec);
  json report = detail::base_report("prices", c);
  kdpa::detail::require(c.thresholds.empty() != c.prices.empty(), ErrorCode::DomainError,
                        "give exactly one of --thresholds or --prices");
  EquilibriumProfile profile;
  if (!c.thresholds.empty()) {
    profile = c.m == 1 ? thresholds_to_prices(dist, c.n, c.thresholds)
                       : thresholds_to_prices_multi(dist, c.n, c.m, c.thresholds);
  } else {
    profile = prices_to_thresholds(dist, PriceSchedule{c.prices, c.n, c.m});
  }
  report["thresholds"] = profile.thresholds;
  report["prices"] = profile.schedule.prices;
  const auto audit = best_response_audit(dist, profile, 1000);
  report["benchmarks"]["audit_max_gain"] = audit.max_gain;
  report["benchmarks"]["audit_max_indifference_gap"] = audit.max_indifference_gap;
  report["pass"]["best_response"] = audit.passed();
  return report;
}

inline json cmd_simulate(const ExperimentConfig& c) {
  c.validate();
  const auto dist = parse_distribution_spec(c.dist_spec);
  json report = detail::base_report("simulate", c);
  const double deflation = 1.0 + c.epsilon;

  if (c.objective == Objective::Prophet) {
    const auto policy = detail::prophet_policy(dist, c);
    const ProphetInstance inst{dist, c.n, c.m, 0};
    log(LogLevel::Info, "simulating prophet policy");
    const auto est = expected_reward_mc(inst, policy, c.trials, c.seed, c.threads);
    const double opt = opt_offline(dist, c.n, c.m);
    const double guarantee = c.m == 1 ? guarantee_single(c.k) : guarantee_multi(c.k, c.m);
    const double ratio = est.mean / opt;
    const double ratio_se = est.std_error / opt;
    report["thresholds"] = policy.thresholds();
    report["estimates"]["reward"] = detail::estimate_json(est);
    report["benchmarks"]["opt_offline"] = opt;
    if (c.m == 1) report["benchmarks"]["exact_reward"] = exact_alg_single(dist, c.n, policy);
    report["ratios"]["reward_over_opt"] = detail::ratio_json(ratio, ratio_se, "opt_offline");
    report["guarantees"]["limit"] = guarantee;
    report["guarantees"]["deflated"] = guarantee / deflation;
    report["pass"]["ratio_meets_guarantee"] = ratio >= guarantee / deflation - 3.0 * ratio_se;
    return report;
  }

  kdpa::detail::require(c.objective != Objective::Both, ErrorCode::DomainError,
                        "objective 'both' is only available for trajectory output");
  kdpa::detail::require(c.n >= 2, ErrorCode::DomainError, "auctions need n >= 2");
  const auto profile = detail::auction_profile(dist, c, c.objective);
  const AuctionInstance inst{dist, c.n, c.m, c.k};
  log(LogLevel::Info, "simulating auction");
  const auto est = expected_outcome_mc(inst, profile, c.trials, c.seed, c.threads);
  report["thresholds"] = profile.thresholds;
  report["prices"] = profile.schedule.prices;
  report["estimates"]["revenue"] = detail::estimate_json(est.revenue);
  report["estimates"]["welfare"] = detail::estimate_json(est.welfare);
  report["estimates"]["virtual_surplus"] = detail::estimate_json(est.virtual_surplus);
  report["estimates"]["revenue_minus_virtual_surplus"] =
      detail::estimate_json(est.revenue_minus_virtual_surplus);
  const double guarantee = c.m == 1 ? guarantee_single(c.k) : guarantee_multi(c.k, c.m);
  report["guarantees"]["limit"] = guarantee;
  report["guarantees"]["deflated"] = guarantee / deflation;

  double ratio = 0.0;
  double ratio_se = 0.0;
  if (c.objective == Objective::Revenue) {
    const double opt = myerson_opt_revenue(dist, c.n, c.m);
    report["reserve"] = VirtualValueTransform(dist).reserve();
    report["benchmarks"]["myerson_opt_revenue"] = opt;
    ratio = est.revenue.mean / opt;
    ratio_se = est.revenue.std_error / opt;
    report["ratios"]["revenue_over_opt"] = detail::ratio_json(ratio, ratio_se, "myerson_opt_revenue");
  } else {
    const double opt = max_welfare(dist, c.n, c.m);
    report["benchmarks"]["max_welfare"] = opt;
    ratio = est.welfare.mean / opt;
    ratio_se = est.welfare.std_error / opt;
    report["ratios"]["welfare_over_opt"] = detail::ratio_json(ratio, ratio_se, "max_welfare");
  }
  report["pass"]["ratio_meets_guarantee"] = ratio >= guarantee / deflation - 3.0 * ratio_se;
  report["pass"]["revenue_equals_virtual_surplus"] =
      std::abs(est.revenue_minus_virtual_surplus.mean) <=
      3.0 * est.revenue_minus_virtual_surplus.std_error;
  return report;
}

inline json cmd_dp(const ExperimentConfig& c) {
  c.validate();
  const auto dist = parse_distribution_spec(c.dist_spec);
  json report = detail::base_report("dp", c);
  const auto sol = dp_solve(dist, c.n, c.k, c.grid, c.m);
  report["thresholds"] = sol.thresholds.thresholds();
  report["benchmarks"]["dp_value"] = sol.value;
  report["benchmarks"]["grid_error"] = sol.grid_error;
  report["benchmarks"]["policy_value"] = sol.policy_value;
  report["benchmarks"]["value_by_rounds"] = sol.value_by_rounds;
  const double balanced = exact_alg_single(dist, c.n, balanced_thresholds_single(dist, c.n, c.k));
  const double opt = opt_offline(dist, c.n, 1);
  report["benchmarks"]["balanced_value"] = balanced;
  report["benchmarks"]["opt_offline"] = opt;
  report["ratios"]["dp_over_opt"] = detail::ratio_json(sol.value / opt, 0.0, "opt_offline");
  report["guarantees"]["limit"] = guarantee_single(c.k);
  report["pass"]["dominates_balanced"] = sol.value + sol.grid_error >= balanced;
  return report;
}

/// CSV `round,price,threshold`; objective `both` emits one block per
/// objective, each introduced by a `# objective=<name>` line.
inline std::string cmd_trajectory(const ExperimentConfig& c) {
  c.validate();
  kdpa::detail::require(c.objective != Objective::Prophet, ErrorCode::DomainError,
                        "trajectory needs an auction objective");
  kdpa::detail::require(c.n >= 2, ErrorCode::DomainError, "auctions need n >= 2");
  const auto dist = parse_distribution_spec(c.dist_spec);
  std::vector<Objective> objectives;
  if (c.objective == Objective::Both)
    objectives = {Objective::Welfare, Objective::Revenue};
  else
    objectives = {c.objective};

  std::string out;
  char line[128];
  for (auto objective : objectives) {
    const auto profile = detail::auction_profile(dist, c, objective);
    if (objectives.size() > 1) out += "# objective=" + to_string(objective) + "\n";
    out += "round,price,threshold\n";
    for (std::size_t j = 0; j < profile.rounds(); ++j) {
      std::snprintf(line, sizeof line, "%zu,%.10f,%.10f\n", j + 1, profile.schedule.prices[j],
                    profile.thresholds[j]);
      out += line;
    }
  }
  return out;
}

struct VerifyOutcome {
  bool passed = true;
  std::string text;
};

inline VerifyOutcome cmd_verify(Suite suite, unsigned threads = 1) {
  VerifyOutcome out;
  char line[256];
  for (const auto& r : run_property_suite(suite, 20240601, threads)) {
    std::snprintf(line, sizeof line, "%s  %-48s margin=%.3e\n", r.passed ? "PASS" : "FAIL",
                  r.name.c_str(), r.margin);
    out.text += line;
    out.passed = out.passed && r.passed;
  }
  out.text += out.passed ? "all properties passed\n" : "some properties failed\n";
  return out;
}

}  // namespace kdpa::cli
