#pragma once

// Finite-horizon dynamic program for hard channel budgets.
//
// J*(t, n, p) is the least expected squared error accumulated over stages t..T
// when n noisy and p perfect channel uses remain. With
//   c1(t, n, p) = J*(t+1, n-1, p) - J*(t+1, n, p)
//   c2(t, n, p) = J*(t+1, n, p-1) - J*(t+1, n, p)
// as the prices of spending a use now, each stage reduces to the priced
// single-stage problem:
//   J*(t, n, p) = J*(t+1, n, p) + min_policy E[(X - Xhat)^2 + c(U)],
// with J*(T+1, ., .) = 0. Values are optimal within the threshold-policy class.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "remest/codec.hpp"
#include "remest/error.hpp"
#include "remest/sources.hpp"
#include "remest/stage.hpp"

namespace remest {

struct DpConfig {
  int T = 1;
  int N1 = 0;
  int N2 = 0;
  double lambda = 1.0;
  double gamma = 1.0;

  void validate() const {
    require(T >= 1, Errc::InvalidArgument, "DpConfig: T must be >= 1");
    require(N1 >= 0 && N2 >= 0, Errc::InvalidArgument, "DpConfig: budgets must be >= 0");
    require(std::isfinite(lambda) && lambda > 0.0, Errc::InvalidArgument, "DpConfig: lambda must be > 0");
    require(std::isfinite(gamma) && gamma > 0.0, Errc::InvalidArgument, "DpConfig: gamma must be > 0");
  }
  SourceModel source() const { return SourceModel::laplace(lambda); }
};

class DpTable;
DpTable solve(const DpConfig& config);

class DpTable {
 public:
  explicit DpTable(const DpConfig& config) : config_(config) {
    config_.validate();
    const std::size_t states = state_count();
    values_.assign(static_cast<std::size_t>(config_.T + 1) * states, 0.0);
    beta1_.assign(static_cast<std::size_t>(config_.T) * states, kInf);
    beta2_.assign(static_cast<std::size_t>(config_.T) * states, kInf);
    filled_from_ = config_.T + 1;
  }

  const DpConfig& config() const noexcept { return config_; }
  // Earliest stage whose values are final; T + 1 for a fresh table.
  int filled_from() const noexcept { return filled_from_; }

  double value(int t, int e_n, int e_p) const {
    check_index(t, e_n, e_p, config_.T + 1);
    require(t >= filled_from_, Errc::TableNotFilled, "DpTable::value: stage not solved yet");
    return values_[value_index(t, e_n, e_p)];
  }

  ThresholdPolicy policy_at(int t, int e_n, int e_p) const {
    check_index(t, e_n, e_p, config_.T);
    require(t >= filled_from_, Errc::TableNotFilled, "DpTable::policy_at: stage not solved yet");
    const std::size_t i = policy_index(t, e_n, e_p);
    return {beta1_[i], beta2_[i]};
  }

  // Flattened row-major storage, index order (t, e_n, e_p); t from 1.
  std::span<const double> values() const noexcept { return values_; }
  std::span<const double> beta1() const noexcept { return beta1_; }
  std::span<const double> beta2() const noexcept { return beta2_; }

  // Rebuilds a table from previously exported arrays.
  static DpTable from_arrays(const DpConfig& config, std::vector<double> values, std::vector<double> beta1,
                             std::vector<double> beta2) {
    DpTable table(config);
    require(values.size() == table.values_.size() && beta1.size() == table.beta1_.size() &&
                beta2.size() == table.beta2_.size(),
            Errc::InvalidArgument, "DpTable::from_arrays: array sizes do not match the config");
    table.values_ = std::move(values);
    table.beta1_ = std::move(beta1);
    table.beta2_ = std::move(beta2);
    table.filled_from_ = 1;
    return table;
  }

 private:
  friend DpTable solve(const DpConfig& config);

  std::size_t state_count() const noexcept {
    return static_cast<std::size_t>(config_.N1 + 1) * static_cast<std::size_t>(config_.N2 + 1);
  }
  std::size_t value_index(int t, int e_n, int e_p) const noexcept {
    return static_cast<std::size_t>(t - 1) * state_count() +
           static_cast<std::size_t>(e_n) * static_cast<std::size_t>(config_.N2 + 1) + static_cast<std::size_t>(e_p);
  }
  std::size_t policy_index(int t, int e_n, int e_p) const noexcept { return value_index(t, e_n, e_p); }

  void check_index(int t, int e_n, int e_p, int t_max) const {
    const bool ok = t >= 1 && t <= t_max && e_n >= 0 && e_n <= config_.N1 && e_p >= 0 && e_p <= config_.N2;
    if (!ok) {
      throw Error(Errc::IndexOutOfRange, "DpTable: index (" + std::to_string(t) + ", " + std::to_string(e_n) +
                                             ", " + std::to_string(e_p) + ") out of range");
    }
  }

  DpConfig config_;
  std::vector<double> values_;
  std::vector<double> beta1_;
  std::vector<double> beta2_;
  int filled_from_ = 0;
};

// Prices of spending a channel use at (t, e_n, e_p); nullopt when that budget is exhausted.
struct ImpliedCosts {
  std::optional<double> c1;
  std::optional<double> c2;
};

namespace detail {
// Differences of values that agree in exact arithmetic can come out a few ulps negative.
inline double clamp_price(double c, double scale) {
  if (c >= 0.0) return c;
  if (c > -1e-12 * std::max(1.0, scale)) return 0.0;
  throw Error(Errc::InvariantViolation, "implied cost is negative: cost-to-go not monotone in budget");
}
}  // namespace detail

inline ImpliedCosts implied_costs(const DpTable& table, int t, int e_n, int e_p) {
  const DpConfig& cfg = table.config();
  require(t >= 1 && t <= cfg.T && e_n >= 0 && e_n <= cfg.N1 && e_p >= 0 && e_p <= cfg.N2, Errc::IndexOutOfRange,
          "implied_costs: index out of range");
  require(table.filled_from() <= t + 1, Errc::TableNotFilled, "implied_costs: stage t+1 not solved yet");
  const double here = table.value(t + 1, e_n, e_p);
  ImpliedCosts out;
  if (e_n >= 1) out.c1 = detail::clamp_price(table.value(t + 1, e_n - 1, e_p) - here, here);
  if (e_p >= 1) out.c2 = detail::clamp_price(table.value(t + 1, e_n, e_p - 1) - here, here);
  return out;
}

// Optimal priced stage for a Laplace(0, 1/lambda) source. An absent price removes that channel.
inline StageSolution stage_optimize(double lambda, double gamma, std::optional<double> c1,
                                    std::optional<double> c2) {
  const CostPair costs{c1.value_or(0.0), c2.value_or(0.0)};
  const ThresholdPolicy pol =
      solve_thresholds_laplace(lambda, gamma, costs, Availability{c1.has_value(), c2.has_value()});
  return stage_cost(SourceModel::laplace(lambda), ChannelSpec::from_snr(gamma), costs, pol);
}

namespace detail {

struct PriceKey {
  std::uint64_t c1;
  std::uint64_t c2;
  bool operator==(const PriceKey&) const = default;
};
struct PriceKeyHash {
  std::size_t operator()(const PriceKey& k) const noexcept {
    return std::hash<std::uint64_t>{}(k.c1 * 0x9E3779B97F4A7C15ULL ^ k.c2);
  }
};
// NaN bits mark an exhausted channel.
inline std::uint64_t price_bits(const std::optional<double>& c) {
  return c ? std::bit_cast<std::uint64_t>(*c) : ~std::uint64_t{0};
}

}  // namespace detail

// Backward induction over t = T..1 for every (e_n, e_p) in the budget box.
inline DpTable solve(const DpConfig& config) {
  DpTable table(config);
  const int T = config.T;
  std::unordered_map<detail::PriceKey, StageSolution, detail::PriceKeyHash> memo;

  for (int t = T; t >= 1; --t) {
    memo.clear();  // results are keyed on exact prices, so reuse within a stage is bit-identical
    for (int e_n = 0; e_n <= config.N1; ++e_n) {
      for (int e_p = 0; e_p <= config.N2; ++e_p) {
        const ImpliedCosts prices = implied_costs(table, t, e_n, e_p);
        const detail::PriceKey key{detail::price_bits(prices.c1), detail::price_bits(prices.c2)};
        auto it = memo.find(key);
        if (it == memo.end()) {
          it = memo.emplace(key, stage_optimize(config.lambda, config.gamma, prices.c1, prices.c2)).first;
        }
        const StageSolution& stage = it->second;
        const std::size_t vi = table.value_index(t, e_n, e_p);
        table.values_[vi] = table.values_[table.value_index(t + 1, e_n, e_p)] + stage.cost;
        table.beta1_[table.policy_index(t, e_n, e_p)] = stage.policy.beta1;
        table.beta2_[table.policy_index(t, e_n, e_p)] = stage.policy.beta2;
      }
    }
    table.filled_from_ = t;

    // Budgets beyond the remaining horizon must not change the value.
    const int remaining = T - t + 1;
    for (int e_n = 0; e_n <= config.N1; ++e_n) {
      for (int e_p = 0; e_p <= config.N2; ++e_p) {
        const double v = table.value(t, e_n, e_p);
        if (e_p >= remaining && v != 0.0) {
          throw Error(Errc::InvariantViolation, "DP: value must vanish when perfect budget covers the horizon");
        }
        if (e_n > remaining) {
          const double clamped = table.value(t, remaining, e_p);
          if (std::abs(v - clamped) > 1e-12 * std::max(1.0, clamped)) {
            throw Error(Errc::InvariantViolation, "DP: surplus noisy budget changed the value");
          }
        }
      }
    }
  }
  return table;
}

struct FixedCostRun {
  std::vector<double> values;  // values[t - 1] for t = 1..T+1
  std::vector<StageSolution> stages;
};

// The same recursion with constant exogenous prices at every stage in place of the implied ones.
inline FixedCostRun solve_fixed_costs(int T, double lambda, double gamma, const CostPair& costs) {
  require(T >= 1, Errc::InvalidArgument, "solve_fixed_costs: T must be >= 1");
  FixedCostRun run;
  run.values.assign(static_cast<std::size_t>(T) + 1, 0.0);
  run.stages.resize(static_cast<std::size_t>(T));
  for (int t = T; t >= 1; --t) {
    const StageSolution stage = stage_optimize(lambda, gamma, costs.c1, costs.c2);
    run.stages[static_cast<std::size_t>(t - 1)] = stage;
    run.values[static_cast<std::size_t>(t - 1)] = run.values[static_cast<std::size_t>(t)] + stage.cost;
  }
  return run;
}

}  // namespace remest
