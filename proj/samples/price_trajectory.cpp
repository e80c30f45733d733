// Prints the welfare and revenue price trajectories of a 5-level descending
// price auction with 10 uniform[0,1] buyers, next to the benchmark each
// schedule is measured against.
#include <cstdio>

#include "kdpa/kdpa.hpp"

int main() {
  const auto g = kdpa::uniform_distribution(0.0, 1.0);
  const int n = 10;
  const int k = 5;

  const auto welfare = kdpa::welfare_prices(g, n, k);
  const auto revenue = kdpa::revenue_prices(g, n, k);

  std::printf("round  welfare price  welfare threshold  revenue price  revenue threshold\n");
  for (std::size_t j = 0; j < static_cast<std::size_t>(k); ++j) {
    std::printf("%5zu  %13.6f  %17.6f  %13.6f  %17.6f\n", j + 1, welfare.schedule.prices[j],
                welfare.thresholds[j], revenue.schedule.prices[j], revenue.thresholds[j]);
  }

  const kdpa::AuctionInstance inst{g, n, 1, k};
  const auto w = kdpa::expected_outcome_mc(inst, welfare, 200000, 7);
  const auto r = kdpa::expected_outcome_mc(inst, revenue, 200000, 7);
  std::printf("\nwelfare schedule: welfare %.4f +- %.4f of max %.4f\n", w.welfare.mean,
              w.welfare.std_error, kdpa::max_welfare(g, n, 1));
  std::printf("revenue schedule: revenue %.4f +- %.4f of optimum %.4f\n", r.revenue.mean,
              r.revenue.std_error, kdpa::myerson_opt_revenue(g, n, 1));
  return 0;
}
