#pragma once

// Symmetric unimodal source laws, interval regions on the extended real line,
// truncated moments and sampling.

#include <algorithm>
#include <cmath>
#include <random>
#include <utility>
#include <vector>

#include "remest/error.hpp"
#include "remest/numerics.hpp"

namespace remest {

enum class SourceKind { Laplace, Uniform };

class SourceModel {
 public:
  // Laplace(0, 1/lambda): density (lambda/2) exp(-lambda |x|).
  static SourceModel laplace(double lambda) {
    require(std::isfinite(lambda) && lambda > 0.0, Errc::InvalidArgument, "laplace: lambda must be > 0");
    return SourceModel(SourceKind::Laplace, lambda, 0.0);
  }
  // Uniform on [-L, L].
  static SourceModel uniform(double half_width) {
    require(std::isfinite(half_width) && half_width > 0.0, Errc::InvalidArgument,
            "uniform: half width must be > 0");
    return SourceModel(SourceKind::Uniform, 0.0, half_width);
  }

  SourceKind kind() const noexcept { return kind_; }
  double lambda() const noexcept { return lambda_; }
  double half_width() const noexcept { return half_width_; }

  double density(double x) const noexcept {
    if (kind_ == SourceKind::Laplace) return 0.5 * lambda_ * std::exp(-lambda_ * std::abs(x));
    return std::abs(x) <= half_width_ ? 0.5 / half_width_ : 0.0;
  }

  // P(X > x), accurate in the right tail.
  double survival(double x) const noexcept {
    if (kind_ == SourceKind::Laplace) {
      if (x >= 0.0) return 0.5 * std::exp(-lambda_ * x);
      return 1.0 - 0.5 * std::exp(lambda_ * x);
    }
    if (x <= -half_width_) return 1.0;
    if (x >= half_width_) return 0.0;
    return 0.5 * (half_width_ - x) / half_width_;
  }

  double cdf(double x) const noexcept {
    if (kind_ == SourceKind::Laplace) {
      if (x < 0.0) return 0.5 * std::exp(lambda_ * x);
      return 1.0 - 0.5 * std::exp(-lambda_ * x);
    }
    return 1.0 - survival(x);
  }

  // Smallest x with cdf(x) = p, p in (0, 1).
  double quantile(double p) const noexcept {
    if (kind_ == SourceKind::Laplace) {
      if (p < 0.5) return std::log(2.0 * p) / lambda_;
      return -std::log(2.0 * (1.0 - p)) / lambda_;
    }
    return -half_width_ + 2.0 * half_width_ * p;
  }

  // x with survival(x) = q; more accurate than quantile(1 - q) for small q.
  double survival_quantile(double q) const noexcept {
    if (kind_ == SourceKind::Laplace) {
      if (q <= 0.5) return -std::log(2.0 * q) / lambda_;
      return std::log(2.0 * (1.0 - q)) / lambda_;
    }
    return half_width_ - 2.0 * half_width_ * q;
  }

  double variance() const noexcept {
    if (kind_ == SourceKind::Laplace) return 2.0 / (lambda_ * lambda_);
    return half_width_ * half_width_ / 3.0;
  }

  std::pair<double, double> support() const noexcept {
    if (kind_ == SourceKind::Laplace) return {-kInf, kInf};
    return {-half_width_, half_width_};
  }

 private:
  SourceModel(SourceKind k, double lambda, double half_width)
      : kind_(k), lambda_(lambda), half_width_(half_width) {}

  SourceKind kind_;
  double lambda_;
  double half_width_;
};

inline double density(const SourceModel& model, double x) { return model.density(x); }

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  bool lo_open = true;
  bool hi_open = true;

  double length() const noexcept { return hi - lo; }
};

// Finite union of disjoint intervals, kept sorted by lower end.
class Region {
 public:
  Region() = default;

  explicit Region(std::vector<Interval> intervals) : intervals_(std::move(intervals)) {
    std::sort(intervals_.begin(), intervals_.end(),
              [](const Interval& a, const Interval& b) { return a.lo < b.lo; });
    for (std::size_t i = 0; i < intervals_.size(); ++i) {
      const Interval& iv = intervals_[i];
      require(!std::isnan(iv.lo) && !std::isnan(iv.hi) && iv.lo <= iv.hi, Errc::InvalidArgument,
              "Region: interval with lo > hi");
      if (i > 0) {
        const Interval& prev = intervals_[i - 1];
        const bool overlap = prev.hi > iv.lo || (prev.hi == iv.lo && !prev.hi_open && !iv.lo_open);
        require(!overlap, Errc::InvalidArgument, "Region: intervals overlap");
      }
    }
  }

  static Region interval(double lo, double hi, bool lo_open = true, bool hi_open = true) {
    return Region({Interval{lo, hi, lo_open, hi_open}});
  }
  static Region real_line() { return interval(-kInf, kInf); }
  // Closed band [-b, b].
  static Region band(double b) { return interval(-b, b, false, false); }
  // (-hi, -lo] U [lo, hi) style mirrored pair, written with the given openness on the positive side.
  static Region symmetric_pair(double lo, double hi, bool lo_open = true, bool hi_open = false) {
    if (lo == 0.0) return interval(-hi, hi, hi_open, hi_open);
    return Region({Interval{-hi, -lo, hi_open, lo_open}, Interval{lo, hi, lo_open, hi_open}});
  }

  const std::vector<Interval>& intervals() const noexcept { return intervals_; }
  bool empty() const noexcept { return intervals_.empty(); }

  bool contains(double x) const noexcept {
    for (const Interval& iv : intervals_) {
      const bool above = iv.lo_open ? x > iv.lo : x >= iv.lo;
      const bool below = iv.hi_open ? x < iv.hi : x <= iv.hi;
      if (above && below) return true;
    }
    return false;
  }

  Region unite(const Region& other) const {
    std::vector<Interval> all = intervals_;
    all.insert(all.end(), other.intervals_.begin(), other.intervals_.end());
    return Region(std::move(all));
  }

  Region mirrored() const {
    std::vector<Interval> out;
    out.reserve(intervals_.size());
    for (const Interval& iv : intervals_) out.push_back({-iv.hi, -iv.lo, iv.hi_open, iv.lo_open});
    return Region(std::move(out));
  }

  // Complement in the extended real line; endpoint openness flips.
  Region complement() const {
    std::vector<Interval> out;
    double cursor = -kInf;
    bool cursor_open = true;
    for (const Interval& iv : intervals_) {
      if (iv.lo > cursor) {
        out.push_back({cursor, iv.lo, cursor_open, !iv.lo_open});
      }
      cursor = iv.hi;
      cursor_open = !iv.hi_open;
    }
    if (cursor < kInf) out.push_back({cursor, kInf, cursor_open, true});
    return Region(std::move(out));
  }

  // Part of the region in (0, inf) / (-inf, 0).
  Region positive_part() const { return clipped(0.0, kInf); }
  Region negative_part() const { return clipped(-kInf, 0.0); }

  Region clipped(double lo, double hi) const {
    std::vector<Interval> out;
    for (const Interval& iv : intervals_) {
      const double a = std::max(iv.lo, lo);
      const double b = std::min(iv.hi, hi);
      if (a < b) out.push_back({a, b, a == iv.lo ? iv.lo_open : true, b == iv.hi ? iv.hi_open : true});
    }
    return Region(std::move(out));
  }

 private:
  std::vector<Interval> intervals_;
};

enum class MomentMethod { ClosedForm, Quadrature };

// Probability mass, conditional mean and conditional variance of X restricted to a set.
struct Moments {
  double prob = 0.0;
  double mean = 0.0;
  double var = 0.0;
};

namespace detail {

// Conditional moments of a truncated exponential Exp(lambda) on [0, w], w may be infinite.
// Returned as (mean offset, variance).
inline std::pair<double, double> truncated_exponential(double lambda, double w) {
  if (std::isinf(w)) return {1.0 / lambda, 1.0 / (lambda * lambda)};
  const double u = lambda * w;
  double mean_frac;  // 1 - u/(e^u - 1)
  if (u < 1e-3) {
    mean_frac = u / 2.0 - u * u / 12.0 + u * u * u * u / 720.0;
  } else if (u > 700.0) {
    mean_frac = 1.0;
  } else {
    mean_frac = 1.0 - u / std::expm1(u);
  }
  const double z = 0.5 * u;
  double var_frac;  // 1 - (z / sinh z)^2
  if (z < 0.1) {
    const double z2 = z * z;
    const double sinh_minus = z * z2 / 6.0 * (1.0 + z2 / 20.0 * (1.0 + z2 / 42.0 * (1.0 + z2 / 72.0)));
    const double s = z + sinh_minus;
    var_frac = sinh_minus * (s + z) / (s * s);
  } else if (z > 350.0) {
    var_frac = 1.0;
  } else {
    const double r = z / std::sinh(z);
    var_frac = 1.0 - r * r;
  }
  return {mean_frac / lambda, var_frac / (lambda * lambda)};
}

// Combine per-piece moments by the law of total variance.
inline Moments combine(const std::vector<Moments>& parts) {
  Moments out;
  for (const Moments& m : parts) out.prob += m.prob;
  if (out.prob <= 0.0) return {0.0, 0.0, 0.0};
  double mean = 0.0;
  for (const Moments& m : parts) mean += m.prob * m.mean;
  mean /= out.prob;
  double var = 0.0;
  for (const Moments& m : parts) {
    const double d = m.mean - mean;
    var += m.prob * (m.var + d * d);
  }
  out.mean = mean;
  out.var = var / out.prob;
  return out;
}

// Laplace piece [a, b] with 0 <= a < b.
inline Moments laplace_positive_piece(double lambda, double a, double b) {
  const double head = 0.5 * std::exp(-lambda * a);
  const double prob = std::isinf(b) ? head : head * -std::expm1(-lambda * (b - a));
  const auto [offset, var] = truncated_exponential(lambda, b - a);
  return {prob, a + offset, var};
}

inline Moments closed_form_interval(const SourceModel& model, double lo, double hi) {
  if (model.kind() == SourceKind::Uniform) {
    const double L = model.half_width();
    const double a = std::max(lo, -L);
    const double b = std::min(hi, L);
    if (!(a < b)) return {};
    const double w = b - a;
    return {w / (2.0 * L), 0.5 * (a + b), w * w / 12.0};
  }
  const double lambda = model.lambda();
  std::vector<Moments> parts;
  if (hi > 0.0 && lo < hi) parts.push_back(laplace_positive_piece(lambda, std::max(lo, 0.0), hi));
  if (lo < 0.0 && lo < hi) {
    Moments m = laplace_positive_piece(lambda, std::max(-hi, 0.0), -lo);
    m.mean = -m.mean;
    parts.push_back(m);
  }
  if (parts.size() == 1) return parts.front();
  return combine(parts);
}

// Density-only route: integrates p, x p and (x - m)^2 p numerically.
inline Moments quadrature_interval(const SourceModel& model, double lo, double hi) {
  const auto [s_lo, s_hi] = model.support();
  const double a = std::max(lo, s_lo);
  const double b = std::min(hi, s_hi);
  if (!(a < b)) return {};
  // split at the mode so the kink is a panel boundary
  std::vector<std::pair<double, double>> pieces;
  if (a < 0.0 && b > 0.0) {
    pieces = {{a, 0.0}, {0.0, b}};
  } else {
    pieces = {{a, b}};
  }
  auto integrate_all = [&](auto&& f) {
    double s = 0.0;
    for (auto [p, q] : pieces) s += numerics::integrate(f, p, q);
    return s;
  };
  const double prob = integrate_all([&](double x) { return model.density(x); });
  if (prob <= 0.0) return {};
  const double mean = integrate_all([&](double x) { return x * model.density(x); }) / prob;
  const double var =
      integrate_all([&](double x) { return (x - mean) * (x - mean) * model.density(x); }) / prob;
  return {prob, mean, var};
}

}  // namespace detail

inline Moments interval_moments(const SourceModel& model, double lo, double hi,
                                MomentMethod method = MomentMethod::ClosedForm) {
  if (!(lo < hi)) return {};
  return method == MomentMethod::ClosedForm ? detail::closed_form_interval(model, lo, hi)
                                            : detail::quadrature_interval(model, lo, hi);
}

inline Moments region_moments(const SourceModel& model, const Region& r,
                              MomentMethod method = MomentMethod::ClosedForm) {
  std::vector<Moments> parts;
  parts.reserve(r.intervals().size());
  for (const Interval& iv : r.intervals()) parts.push_back(interval_moments(model, iv.lo, iv.hi, method));
  if (parts.size() == 1) return parts.front();
  return detail::combine(parts);
}

inline double region_prob(const SourceModel& model, const Region& r,
                          MomentMethod method = MomentMethod::ClosedForm) {
  double p = 0.0;
  for (const Interval& iv : r.intervals()) p += interval_moments(model, iv.lo, iv.hi, method).prob;
  return std::clamp(p, 0.0, 1.0);
}

inline double truncated_mean(const SourceModel& model, const Region& r,
                             MomentMethod method = MomentMethod::ClosedForm) {
  const Moments m = region_moments(model, r, method);
  require(m.prob > 0.0, Errc::ZeroProbabilityRegion, "truncated_mean: region has zero probability");
  return m.mean;
}

inline double truncated_var(const SourceModel& model, const Region& r,
                            MomentMethod method = MomentMethod::ClosedForm) {
  const Moments m = region_moments(model, r, method);
  require(m.prob > 0.0, Errc::ZeroProbabilityRegion, "truncated_var: region has zero probability");
  return std::max(m.var, 0.0);
}

// Uniform variate in (0, 1); never returns 0 so logarithms stay finite.
template <class Rng>
double open_unit(Rng& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  double u = unit(rng);
  while (u <= 0.0) u = unit(rng);
  return u;
}

// One draw from the source law by inverse CDF.
template <class Rng>
double sample(const SourceModel& model, Rng& rng) {
  return model.quantile(open_unit(rng));
}

// One draw from X conditioned on X in (lo, hi). Requires positive mass.
template <class Rng>
double sample_truncated(const SourceModel& model, double lo, double hi, Rng& rng) {
  const double u = open_unit(rng);
  if (lo >= 0.0) {
    const double s_lo = model.survival(lo);
    const double s_hi = model.survival(hi);
    require(s_lo > s_hi, Errc::ZeroProbabilityRegion, "sample_truncated: empty interval");
    return std::clamp(model.survival_quantile(s_lo - u * (s_lo - s_hi)), lo, hi);
  }
  if (hi <= 0.0) return -sample_truncated(model, -hi, -lo, rng);
  const double f_lo = model.cdf(lo);
  const double f_hi = model.cdf(hi);
  require(f_hi > f_lo, Errc::ZeroProbabilityRegion, "sample_truncated: empty interval");
  return std::clamp(model.quantile(f_lo + u * (f_hi - f_lo)), lo, hi);
}

// Right end b2' of an interval starting at b1' carrying the same mass as (b1, b2).
inline double shifted_interval(const SourceModel& model, double beta1, double beta1p, double beta2) {
  require(beta1 >= 0.0 && beta1 <= beta1p && beta1 <= beta2, Errc::InvalidArgument,
          "shifted_interval: need 0 <= beta1 <= beta1', beta1 <= beta2");
  if (beta1p == beta1) return beta2;
  const double mass = model.survival(beta1) - model.survival(beta2);
  const double target = model.survival(beta1p) - mass;  // required survival at the new right end
  if (target < 0.0) {
    // allow one rounding step of slack before declaring infeasible
    require(target > -4.0 * std::numeric_limits<double>::epsilon(), Errc::InfeasibleShift,
            "shifted_interval: not enough mass right of beta1'");
    return model.support().second;
  }
  if (target == 0.0) return model.support().second;

  auto fdf = [&](double x) {
    return std::pair{target - model.survival(x), model.density(x)};
  };
  double hi = std::max(1.0, 2.0 * beta1p);
  while (model.survival(hi) > target) hi *= 2.0;
  return numerics::newton_bisect(fdf, beta1p, hi).x;
}

}  // namespace remest
