#pragma once

// Power-normalised affine encoder/decoder pairs and the additive-noise channel.
//
// The sign-aware codec serves the noisy transmission region (b1, b2] U [-b2, -b1):
// the encoder centres |x| on b = E[X | X in (b1, b2)] and scales by
// alpha = sqrt(P_T / Var(X | X in (b1, b2))); the decoder applies the linear MMSE
// gain gamma / (gamma + 1) and restores the sign from the side channel.
// The plain codec is the same map without the side channel, over an arbitrary region.

#include <cmath>
#include <limits>
#include <optional>
#include <random>

#include "remest/error.hpp"
#include "remest/sources.hpp"

namespace remest {

enum class NoiseKind { Gaussian, Laplace, Uniform };

class ChannelSpec {
 public:
  ChannelSpec(double power, double noise_var, NoiseKind kind = NoiseKind::Gaussian)
      : power_(power), noise_var_(noise_var), kind_(kind) {
    require(std::isfinite(power) && power > 0.0, Errc::InvalidArgument, "ChannelSpec: power must be > 0");
    require(std::isfinite(noise_var) && noise_var > 0.0, Errc::InvalidArgument,
            "ChannelSpec: noise variance must be > 0");
  }

  // Unit power, noise variance 1/gamma.
  static ChannelSpec from_snr(double gamma, NoiseKind kind = NoiseKind::Gaussian, double power = 1.0) {
    require(std::isfinite(gamma) && gamma > 0.0, Errc::InvalidArgument, "ChannelSpec: gamma must be > 0");
    return ChannelSpec(power, power / gamma, kind);
  }

  double power() const noexcept { return power_; }
  double noise_var() const noexcept { return noise_var_; }
  NoiseKind noise_kind() const noexcept { return kind_; }
  double gamma() const noexcept { return power_ / noise_var_; }
  // gamma / (gamma + 1), the decoder's shrinkage gain.
  double gain() const noexcept { return power_ / (power_ + noise_var_); }

 private:
  double power_;
  double noise_var_;
  NoiseKind kind_;
};

template <class Rng>
double channel_noise(const ChannelSpec& chan, Rng& rng) {
  const double sigma = std::sqrt(chan.noise_var());
  switch (chan.noise_kind()) {
    case NoiseKind::Gaussian: {
      std::normal_distribution<double> n(0.0, sigma);
      return n(rng);
    }
    case NoiseKind::Laplace: {
      const double u = open_unit(rng);
      const double scale = sigma / std::sqrt(2.0);
      return u < 0.5 ? scale * std::log(2.0 * u) : -scale * std::log(2.0 * (1.0 - u));
    }
    case NoiseKind::Uniform: {
      const double half = std::sqrt(3.0) * sigma;
      std::uniform_real_distribution<double> unif(-half, half);
      return unif(rng);
    }
  }
  return 0.0;
}

inline double transmit(double y, double v) noexcept { return y + v; }

enum class Sign : int { Minus = -1, Plus = 1 };

// Side-channel symbol; std::nullopt is the "nothing sent" symbol.
using SideSymbol = std::optional<Sign>;

// Zero is assigned to the positive side.
inline Sign sign_of(double x) noexcept { return x < 0.0 ? Sign::Minus : Sign::Plus; }
inline double to_double(Sign s) noexcept { return static_cast<double>(static_cast<int>(s)); }

struct CodecState {
  double b = 0.0;         // E[X | noisy, S = +1]
  double var_plus = 0.0;  // Var(X | noisy, S = +1)
  double alpha = 0.0;
};

namespace detail {
inline void check_nondegenerate(double var, double centre) {
  const double eps = std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(centre));
  require(var > eps * eps, Errc::DegenerateRegion, "codec: conditional variance is zero");
}
}  // namespace detail

inline CodecState make_codec(const SourceModel& model, double beta1, double beta2, const ChannelSpec& chan) {
  require(beta1 >= 0.0 && beta1 < beta2, Errc::InvalidArgument, "make_codec: need 0 <= beta1 < beta2");
  const Moments m = interval_moments(model, beta1, beta2);
  require(m.prob > 0.0, Errc::ZeroProbabilityRegion, "make_codec: noisy region has zero probability");
  detail::check_nondegenerate(m.var, m.mean);
  return {m.mean, m.var, std::sqrt(chan.power() / m.var)};
}

inline double encode(const CodecState& codec, double x, Sign s) {
  require(sign_of(x) == s, Errc::SignMismatch, "encode: side symbol disagrees with sign(x)");
  const double sd = to_double(s);
  return sd * codec.alpha * (x - sd * codec.b);
}

inline double decode_noisy(const CodecState& codec, double y_tilde, SideSymbol s, const ChannelSpec& chan) {
  require(s.has_value(), Errc::ProtocolViolation, "decode_noisy: noisy message without side-channel sign");
  const double sd = to_double(*s);
  return chan.gain() / codec.alpha * sd * y_tilde + sd * codec.b;
}

// Estimate when nothing is sent: the conditional mean over [-beta1, beta1].
inline double decode_silent(const SourceModel& model, double beta1) {
  return truncated_mean(model, Region::band(beta1));
}

// Affine codec without side channel: a single mean/variance over the whole noisy region.
struct PlainCodec {
  double mean = 0.0;
  double var = 0.0;
  double alpha = 0.0;
};

inline PlainCodec make_plain_codec(const SourceModel& model, const Region& noisy, const ChannelSpec& chan) {
  const Moments m = region_moments(model, noisy);
  require(m.prob > 0.0, Errc::ZeroProbabilityRegion, "make_plain_codec: noisy region has zero probability");
  detail::check_nondegenerate(m.var, m.mean);
  return {m.mean, m.var, std::sqrt(chan.power() / m.var)};
}

inline double encode(const PlainCodec& codec, double x) noexcept { return codec.alpha * (x - codec.mean); }

inline double decode(const PlainCodec& codec, double y_tilde, const ChannelSpec& chan) noexcept {
  return chan.gain() / codec.alpha * y_tilde + codec.mean;
}

}  // namespace remest
