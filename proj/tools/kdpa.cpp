#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "commands.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitVerifyFailed = 1;
constexpr int kExitConfig = 2;
constexpr int kExitNumeric = 3;

void add_common(CLI::App* cmd, kdpa::cli::ExperimentConfig& c, std::string& objective,
                std::string& out) {
  cmd->add_option("--dist", c.dist_spec, "uniform:a,b | exp:rate | table:path.csv");
  cmd->add_option("--n", c.n, "number of buyers / rewards");
  cmd->add_option("--m", c.m, "units");
  cmd->add_option("--k", c.k, "price levels / thresholds");
  cmd->add_option("--objective", objective, "revenue | welfare | prophet | both");
  cmd->add_option("--trials", c.trials, "Monte Carlo trials");
  cmd->add_option("--seed", c.seed, "random seed");
  cmd->add_option("--epsilon", c.epsilon, "deflation of asymptotic guarantees");
  cmd->add_option("--grid", c.grid, "dynamic programming grid size");
  cmd->add_option("--threads", c.threads, "worker threads (does not change results)");
  cmd->add_option("--out", out, "write output to this path instead of stdout");
}

void emit(const std::string& text, const std::string& path) {
  if (path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw kdpa::Error(kdpa::ErrorCode::ParseError, "cannot open output file '" + path + "'");
  f << text;
}

}  // namespace

int main(int argc, char** argv) {
  using namespace kdpa::cli;
  CLI::App app{"k-level descending price auctions and batched prophet inequalities"};
  app.require_subcommand(1);

  ExperimentConfig config;
  std::string objective;
  std::string out;
  std::string suite = "fast";

  auto* thresholds = app.add_subcommand("thresholds", "balanced thresholds and their prices");
  auto* prices = app.add_subcommand("prices", "map thresholds to prices or prices to thresholds");
  auto* simulate = app.add_subcommand("simulate", "Monte Carlo evaluation against benchmarks");
  auto* dp = app.add_subcommand("dp", "dynamic-programming optimal thresholds");
  auto* trajectory = app.add_subcommand("trajectory", "price and threshold trajectory as CSV");
  auto* verify = app.add_subcommand("verify", "run the property suite");
  for (auto* cmd : {thresholds, prices, simulate, dp, trajectory})
    add_common(cmd, config, objective, out);
  prices->add_option("--thresholds", config.thresholds, "comma separated thresholds")->delimiter(',');
  prices->add_option("--prices", config.prices, "comma separated prices")->delimiter(',');
  verify->add_option("suite", suite, "fast | full")->check(CLI::IsMember({"fast", "full"}));
  verify->add_option("--threads", config.threads, "worker threads");
  verify->add_option("--out", out, "write the report to this path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (!objective.empty()) {
      config.objective = parse_objective(objective);
    } else if (trajectory->parsed()) {
      config.objective = Objective::Both;
    }

    if (verify->parsed()) {
      const auto result = cmd_verify(suite == "full" ? kdpa::Suite::Full : kdpa::Suite::Fast,
                                     config.threads);
      emit(result.text, out);
      return result.passed ? kExitOk : kExitVerifyFailed;
    }
    if (trajectory->parsed()) {
      emit(cmd_trajectory(config), out);
      return kExitOk;
    }
    json report;
    if (thresholds->parsed()) report = cmd_thresholds(config);
    if (prices->parsed()) report = cmd_prices(config);
    if (simulate->parsed()) report = cmd_simulate(config);
    if (dp->parsed()) report = cmd_dp(config);
    emit(report.dump(2) + "\n", out);
    return kExitOk;
  } catch (const kdpa::Error& e) {
    log(LogLevel::Error, e.what());
    return kdpa::is_input_error(e.code()) ? kExitConfig : kExitNumeric;
  } catch (const std::exception& e) {
    log(LogLevel::Error, e.what());
    return kExitNumeric;
  }
}
