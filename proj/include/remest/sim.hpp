#pragma once

// Monte Carlo simulation of the scheduled pipeline under a solved DP table:
// source draw, scheduling decision, encoder, channel and side channel, decoder.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <exception>
#include <optional>
#include <random>
#include <thread>
#include <vector>

#include "remest/codec.hpp"
#include "remest/dp.hpp"
#include "remest/error.hpp"
#include "remest/sources.hpp"
#include "remest/stage.hpp"

namespace remest {

struct StepRecord {
  int t = 0;
  double x = 0.0;
  int u = 0;
  SideSymbol s;
  std::optional<double> y;
  std::optional<double> y_tilde;  // nullopt for silence; x itself for the perfect channel
  double x_hat = 0.0;
  double sq_err = 0.0;
  int e_n_after = 0;
  int e_p_after = 0;
};

// Per-episode seed: SplitMix64 finaliser applied to master + golden * (index + 1).
inline std::uint64_t derive_seed(std::uint64_t master_seed, std::uint64_t episode) noexcept {
  std::uint64_t z = master_seed + 0x9E3779B97F4A7C15ULL * (episode + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

namespace detail {
inline void check_channel(const DpTable& table, const ChannelSpec& chan) {
  const double g = table.config().gamma;
  require(std::abs(chan.gamma() - g) <= 1e-12 * g, Errc::InvalidArgument,
          "simulation: channel SNR differs from the SNR the table was solved for");
}
}  // namespace detail

// Runs one episode and hands each step to `visit(const StepRecord&)`.
template <class Visitor>
void simulate_episode(const DpTable& table, const ChannelSpec& chan, std::uint64_t seed, Visitor&& visit) {
  detail::check_channel(table, chan);
  const DpConfig& cfg = table.config();
  const SourceModel model = cfg.source();
  std::mt19937_64 rng(seed);
  int e_n = cfg.N1;
  int e_p = cfg.N2;
  for (int t = 1; t <= cfg.T; ++t) {
    StepRecord r;
    r.t = t;
    r.x = sample(model, rng);
    const ThresholdPolicy pol = table.policy_at(t, e_n, e_p);
    r.u = pol.decide(r.x);
    if (r.u == 1) {
      if (e_n <= 0) throw Error(Errc::InvariantViolation, "simulation: noisy channel used with no budget left");
      const CodecState codec = make_codec(model, pol.beta1, pol.beta2, chan);
      r.s = sign_of(r.x);
      r.y = encode(codec, r.x, *r.s);
      r.y_tilde = transmit(*r.y, channel_noise(chan, rng));
      r.x_hat = decode_noisy(codec, *r.y_tilde, r.s, chan);
      --e_n;
    } else if (r.u == 2) {
      if (e_p <= 0) throw Error(Errc::InvariantViolation, "simulation: perfect channel used with no budget left");
      r.y_tilde = r.x;
      r.x_hat = r.x;
      --e_p;
    } else {
      // silence over [-b1, b1] reveals only the band; its mean is 0 by symmetry
      r.x_hat = pol.beta1 > 0.0 ? decode_silent(model, pol.beta1) : 0.0;
    }
    r.sq_err = (r.x - r.x_hat) * (r.x - r.x_hat);
    r.e_n_after = e_n;
    r.e_p_after = e_p;
    visit(static_cast<const StepRecord&>(r));
  }
}

inline std::vector<StepRecord> run_episode(const DpTable& table, const ChannelSpec& chan, std::uint64_t seed) {
  std::vector<StepRecord> trace;
  trace.reserve(static_cast<std::size_t>(table.config().T));
  simulate_episode(table, chan, seed, [&](const StepRecord& r) { trace.push_back(r); });
  return trace;
}

struct McSummary {
  std::int64_t episodes = 0;
  double mean_total_cost = 0.0;
  double std_err = 0.0;
  double mean_noisy_uses = 0.0;
  double mean_perfect_uses = 0.0;
  double frac_perfect_exhausted = 0.0;
  double frac_noisy_exhausted = 0.0;
  // power check over every noisy step
  std::int64_t noisy_steps = 0;
  double mean_y_sq = 0.0;
  double y_sq_std_err = 0.0;
};

namespace detail {
struct EpisodeStats {
  double total_cost = 0.0;
  int noisy_uses = 0;
  int perfect_uses = 0;
  double y_sq_sum = 0.0;
  double y_quartic_sum = 0.0;
};
}  // namespace detail

// Episodes run in parallel on derived seeds; the reduction walks them in index
// order so the summary does not depend on the thread count.
inline McSummary monte_carlo(const DpTable& table, const ChannelSpec& chan, std::int64_t n_episodes,
                             std::uint64_t master_seed, unsigned threads = 0) {
  require(n_episodes >= 1, Errc::InvalidArgument, "monte_carlo: need at least one episode");
  detail::check_channel(table, chan);
  std::vector<detail::EpisodeStats> stats(static_cast<std::size_t>(n_episodes));

  auto run_range = [&](std::int64_t begin, std::int64_t end) {
    for (std::int64_t i = begin; i < end; ++i) {
      detail::EpisodeStats& st = stats[static_cast<std::size_t>(i)];
      simulate_episode(table, chan, derive_seed(master_seed, static_cast<std::uint64_t>(i)),
                       [&](const StepRecord& r) {
                         st.total_cost += r.sq_err;
                         if (r.u == 1) {
                           ++st.noisy_uses;
                           const double y2 = *r.y * *r.y;
                           st.y_sq_sum += y2;
                           st.y_quartic_sum += y2 * y2;
                         } else if (r.u == 2) {
                           ++st.perfect_uses;
                         }
                       });
    }
  };

  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::int64_t>(threads, n_episodes));
  if (threads <= 1) {
    run_range(0, n_episodes);
  } else {
    std::vector<std::exception_ptr> errors(threads);
    {
      std::vector<std::jthread> pool;
      const std::int64_t chunk = (n_episodes + threads - 1) / threads;
      for (unsigned k = 0; k < threads; ++k) {
        const std::int64_t begin = k * chunk;
        const std::int64_t end = std::min(n_episodes, begin + chunk);
        if (begin >= end) continue;
        pool.emplace_back([&, k, begin, end] {
          try {
            run_range(begin, end);
          } catch (...) {
            errors[k] = std::current_exception();
          }
        });
      }
    }
    for (const auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }

  const DpConfig& cfg = table.config();
  McSummary s;
  s.episodes = n_episodes;
  double sum = 0.0, sum2 = 0.0, y2 = 0.0, y4 = 0.0;
  std::int64_t noisy = 0, perfect = 0, p_exhausted = 0, n_exhausted = 0;
  for (const auto& st : stats) {
    sum += st.total_cost;
    sum2 += st.total_cost * st.total_cost;
    noisy += st.noisy_uses;
    perfect += st.perfect_uses;
    if (st.perfect_uses == cfg.N2) ++p_exhausted;
    if (st.noisy_uses == cfg.N1) ++n_exhausted;
    y2 += st.y_sq_sum;
    y4 += st.y_quartic_sum;
  }
  const double n = static_cast<double>(n_episodes);
  s.mean_total_cost = sum / n;
  s.std_err = n > 1.0 ? std::sqrt(std::max(0.0, (sum2 - n * s.mean_total_cost * s.mean_total_cost) / (n - 1.0)) / n)
                      : 0.0;
  s.mean_noisy_uses = static_cast<double>(noisy) / n;
  s.mean_perfect_uses = static_cast<double>(perfect) / n;
  s.frac_perfect_exhausted = static_cast<double>(p_exhausted) / n;
  s.frac_noisy_exhausted = static_cast<double>(n_exhausted) / n;
  s.noisy_steps = noisy;
  if (noisy > 0) {
    const double m = static_cast<double>(noisy);
    s.mean_y_sq = y2 / m;
    s.y_sq_std_err = m > 1.0 ? std::sqrt(std::max(0.0, (y4 - m * s.mean_y_sq * s.mean_y_sq) / (m - 1.0)) / m) : 0.0;
  }
  return s;
}

struct PathPoint {
  int t = 0;
  int e_n = 0;
  int e_p = 0;
};

// Remaining budgets at the start of each stage t = 1..T, plus the final state at T + 1.
inline std::vector<PathPoint> sample_path_export(const std::vector<StepRecord>& trace) {
  std::vector<PathPoint> path;
  if (trace.empty()) return path;
  path.reserve(trace.size() + 1);
  const StepRecord& first = trace.front();
  path.push_back({first.t, first.e_n_after + (first.u == 1 ? 1 : 0), first.e_p_after + (first.u == 2 ? 1 : 0)});
  for (const StepRecord& r : trace) path.push_back({r.t + 1, r.e_n_after, r.e_p_after});
  return path;
}

}  // namespace remest
