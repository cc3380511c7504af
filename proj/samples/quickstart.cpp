// Solve a small budget DP, inspect one policy and check it by simulation.

#include <cstdio>

#include "remest/remest.hpp"

int main() {
  using namespace remest;

  const ThresholdPolicy stage = solve_thresholds_laplace(1.0, 1.0, CostPair{0.1, 1.0});
  std::printf("stage thresholds: beta1 = %.6f, beta2 = %.6f\n", stage.beta1, stage.beta2);

  const DpConfig config{20, 5, 3, 1.0, 1.0};
  const DpTable table = solve(config);
  const ThresholdPolicy first = table.policy_at(1, config.N1, config.N2);
  std::printf("J*(1, %d, %d) = %.6f with thresholds (%.4f, %.4f)\n", config.N1, config.N2,
              table.value(1, config.N1, config.N2), first.beta1, first.beta2);

  const McSummary mc = monte_carlo(table, ChannelSpec::from_snr(config.gamma), 20000, 7);
  std::printf("Monte Carlo: %.6f +/- %.6f over %lld episodes\n", mc.mean_total_cost, mc.std_err,
              static_cast<long long>(mc.episodes));
  return 0;
}
