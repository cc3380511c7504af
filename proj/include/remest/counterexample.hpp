#pragma once

// Without the side channel, the symmetric threshold-in-threshold policy is not
// optimal for a uniform source: folding the disconnected noisy band
// [-b2, -b1) U (b1, b2] into the single interval (b1, 2 b2 - b1] keeps its mass
// but shrinks its conditional variance, which lowers the cost.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "remest/codec.hpp"
#include "remest/error.hpp"
#include "remest/sources.hpp"
#include "remest/stage.hpp"

namespace remest {

// Pointwise-optimal thresholds when all three regions are symmetric and every
// conditional mean is zero (no side channel).
inline ThresholdPolicy pointwise_thresholds(double gamma, const CostPair& costs) {
  require(std::isfinite(gamma) && gamma > 0.0, Errc::InvalidArgument, "pointwise_thresholds: gamma > 0");
  require(costs.c1 > 0.0 && costs.c2 > 0.0 && std::isfinite(costs.c1) && std::isfinite(costs.c2),
          Errc::InvalidArgument, "pointwise_thresholds: costs must be > 0");
  const double b01 = std::sqrt((gamma + 1.0) * costs.c1 / gamma);
  const double b02 = std::sqrt(costs.c2);
  const double beta1 = std::min(b01, b02);
  if (costs.c1 + beta1 * beta1 / (gamma + 1.0) <= costs.c2) {
    return {beta1, std::sqrt((costs.c2 - costs.c1) * (gamma + 1.0))};
  }
  return {beta1, beta1};
}

struct SchedulingRegions {
  Region silent;
  Region noisy;
  Region perfect;
};

struct CounterexampleSetup {
  double half_width = 1.0;
  double gamma = 1.0;
  CostPair costs;
  ThresholdPolicy thresholds;
  SchedulingRegions symmetric;  // f*
  SchedulingRegions folded;     // f'

  SourceModel model() const { return SourceModel::uniform(half_width); }

  static CounterexampleSetup make(double half_width, double gamma, const CostPair& costs) {
    require(std::isfinite(half_width) && half_width > 0.0, Errc::InvalidArgument, "counterexample: L > 0");
    const ThresholdPolicy th = pointwise_thresholds(gamma, costs);
    const bool cheap_enough = (gamma + 1.0) / gamma * costs.c1 < costs.c2;
    const bool inside = std::sqrt((costs.c2 - costs.c1) * (gamma + 1.0)) < half_width;
    require(cheap_enough && inside, Errc::CounterexampleOutOfRange,
            "counterexample: need (g+1)/g c1 < c2 and sqrt((c2-c1)(g+1)) < L");
    const double b1 = th.beta1;
    const double b2 = th.beta2;
    const double folded_end = 2.0 * b2 - b1;
    require(folded_end <= half_width, Errc::CounterexampleOutOfRange,
            "counterexample: folded noisy interval (b1, 2 b2 - b1] leaves the support");
    const double L = half_width;

    CounterexampleSetup s;
    s.half_width = L;
    s.gamma = gamma;
    s.costs = costs;
    s.thresholds = th;
    s.symmetric.silent = Region::band(b1);
    s.symmetric.noisy = Region({{-b2, -b1, false, true}, {b1, b2, true, false}});
    s.symmetric.perfect = Region({{-L, -b2, false, true}, {b2, L, true, false}});
    s.folded.silent = Region::band(b1);
    s.folded.noisy = Region::interval(b1, folded_end, true, false);
    s.folded.perfect = Region({{-L, -b1, false, true}, {folded_end, L, true, false}});
    return s;
  }
};

namespace detail {

// Throws PartitionError unless the regions are disjoint up to endpoints and cover the support.
inline void check_partition(const SourceModel& model, const SchedulingRegions& r) {
  std::vector<Interval> all;
  for (const Region* reg : {&r.silent, &r.noisy, &r.perfect}) {
    all.insert(all.end(), reg->intervals().begin(), reg->intervals().end());
  }
  std::sort(all.begin(), all.end(), [](const Interval& a, const Interval& b) { return a.lo < b.lo; });
  const auto [s_lo, s_hi] = model.support();
  double covered = s_lo;
  for (const Interval& iv : all) {
    require(iv.lo >= covered, Errc::PartitionError,
            "partition: regions overlap");
    if (iv.lo > covered) {
      require(interval_moments(model, covered, iv.lo).prob <= 1e-15, Errc::PartitionError,
              "partition: regions leave a gap");
    }
    covered = std::max(covered, iv.hi);
  }
  if (covered < s_hi) {
    require(interval_moments(model, covered, s_hi).prob <= 1e-15, Errc::PartitionError,
            "partition: regions leave a gap");
  }
}

inline double weighted_var(const SourceModel& model, const Region& r) {
  const Moments m = region_moments(model, r);
  return m.prob > 0.0 ? m.var * m.prob : 0.0;
}

}  // namespace detail

// Expected single-stage cost without side channel: one conditional mean and
// variance over the whole (possibly disconnected) noisy region.
inline double original_cost(const SourceModel& model, const ChannelSpec& chan, const CostPair& costs,
                            const SchedulingRegions& regions) {
  detail::check_partition(model, regions);
  const double p1 = region_prob(model, regions.noisy);
  const double p2 = region_prob(model, regions.perfect);
  return detail::weighted_var(model, regions.silent) + costs.c1 * p1 +
         detail::weighted_var(model, regions.noisy) / (chan.gamma() + 1.0) + costs.c2 * p2;
}

// Expected single-stage cost with the sign side channel: the noisy region is
// coded separately on each side of zero.
inline double side_channel_cost(const SourceModel& model, const ChannelSpec& chan, const CostPair& costs,
                                const SchedulingRegions& regions) {
  detail::check_partition(model, regions);
  const double shrink = 1.0 / (chan.gamma() + 1.0);
  double j = detail::weighted_var(model, regions.silent) + costs.c2 * region_prob(model, regions.perfect);
  for (const Region& side : {regions.noisy.positive_part(), regions.noisy.negative_part()}) {
    j += shrink * detail::weighted_var(model, side) + costs.c1 * region_prob(model, side);
  }
  return j;
}

// J(f') - J(f*) from the two noisy-region variances alone.
inline double cost_gap(const CounterexampleSetup& setup) {
  const SourceModel model = setup.model();
  const double p = region_prob(model, setup.folded.noisy);
  return p / (setup.gamma + 1.0) *
         (truncated_var(model, setup.folded.noisy) - truncated_var(model, setup.symmetric.noisy));
}

struct GapReplay {
  std::int64_t samples = 0;
  double mean_symmetric = 0.0;
  double mean_folded = 0.0;
  double mean_gap = 0.0;  // folded minus symmetric
  double gap_std_err = 0.0;
};

// Simulates both policies with plain affine codecs on common source and noise draws.
inline GapReplay replay_gap(const CounterexampleSetup& setup, std::int64_t samples, std::uint64_t seed,
                            NoiseKind noise = NoiseKind::Gaussian) {
  require(samples >= 2, Errc::InvalidArgument, "replay_gap: need at least 2 samples");
  const SourceModel model = setup.model();
  const ChannelSpec chan = ChannelSpec::from_snr(setup.gamma, noise);
  const PlainCodec star = make_plain_codec(model, setup.symmetric.noisy, chan);
  const PlainCodec fold = make_plain_codec(model, setup.folded.noisy, chan);
  const double star_silent = truncated_mean(model, setup.symmetric.silent);
  const double fold_silent = truncated_mean(model, setup.folded.silent);

  auto step_cost = [&](const SchedulingRegions& r, const PlainCodec& codec, double silent_est, double x,
                       double v) {
    if (r.noisy.contains(x)) {
      const double xh = decode(codec, transmit(encode(codec, x), v), chan);
      return setup.costs.c1 + (x - xh) * (x - xh);
    }
    if (r.silent.contains(x)) return (x - silent_est) * (x - silent_est);
    return setup.costs.c2;
  };

  std::mt19937_64 rng(seed);
  double sum_star = 0.0, sum_fold = 0.0, sum_d = 0.0, sum_d2 = 0.0;
  for (std::int64_t i = 0; i < samples; ++i) {
    const double x = sample(model, rng);
    const double v = channel_noise(chan, rng);
    const double js = step_cost(setup.symmetric, star, star_silent, x, v);
    const double jf = step_cost(setup.folded, fold, fold_silent, x, v);
    sum_star += js;
    sum_fold += jf;
    sum_d += jf - js;
    sum_d2 += (jf - js) * (jf - js);
  }
  const double n = static_cast<double>(samples);
  GapReplay out;
  out.samples = samples;
  out.mean_symmetric = sum_star / n;
  out.mean_folded = sum_fold / n;
  out.mean_gap = sum_d / n;
  const double var = std::max(0.0, (sum_d2 - n * out.mean_gap * out.mean_gap) / (n - 1.0));
  out.gap_std_err = std::sqrt(var / n);
  return out;
}

}  // namespace remest
