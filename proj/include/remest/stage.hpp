#pragma once

// Single-stage scheduling with per-use channel prices.
//
// A threshold policy (beta1, beta2) stays silent for |x| <= beta1, uses the noisy
// channel with side channel for beta1 < |x| <= beta2 and the perfect channel above.
// Its expected cost is
//   J = 2 int_0^b1 x^2 p + 2 c1 P1 + 2/(g+1) Var(X | (b1, b2)) P1 + 2 c2 P2,
// with P1 = P(X in (b1, b2)) and P2 = P(X > b2).

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <utility>
#include <vector>

#include "remest/codec.hpp"
#include "remest/error.hpp"
#include "remest/numerics.hpp"
#include "remest/sources.hpp"

namespace remest {

struct CostPair {
  double c1 = 0.0;  // noisy channel
  double c2 = 0.0;  // perfect channel

  void validate() const {
    require(std::isfinite(c1) && c1 >= 0.0, Errc::InvalidArgument, "CostPair: c1 must be finite and >= 0");
    require(std::isfinite(c2) && c2 >= 0.0, Errc::InvalidArgument, "CostPair: c2 must be finite and >= 0");
  }
};

struct ThresholdPolicy {
  double beta1 = kInf;
  double beta2 = kInf;

  void validate() const {
    require(!std::isnan(beta1) && !std::isnan(beta2) && beta1 >= 0.0 && beta1 <= beta2, Errc::InvalidArgument,
            "ThresholdPolicy: need 0 <= beta1 <= beta2");
  }

  static ThresholdPolicy silence() { return {kInf, kInf}; }
  bool uses_noisy() const noexcept { return beta1 < beta2; }
  bool uses_perfect() const noexcept { return beta2 < kInf; }

  // 0 silent, 1 noisy, 2 perfect; ties go to the lower action.
  int decide(double x) const noexcept {
    const double a = std::abs(x);
    if (a <= beta1) return 0;
    if (a <= beta2) return 1;
    return 2;
  }

  friend bool operator==(const ThresholdPolicy&, const ThresholdPolicy&) = default;
};

struct StageSolution {
  ThresholdPolicy policy;
  double cost = 0.0;
  double distortion_part = 0.0;
  double comm_part = 0.0;
};

inline StageSolution stage_cost(const SourceModel& model, const ChannelSpec& chan, const CostPair& costs,
                                const ThresholdPolicy& pol, MomentMethod method = MomentMethod::ClosedForm) {
  pol.validate();
  const double b1 = pol.beta1;
  const double b2 = pol.beta2;

  double distortion = 0.0;
  if (b1 > 0.0) {
    const Moments silent = interval_moments(model, -b1, b1, method);
    distortion += silent.prob * silent.var;
  }
  double comm = 0.0;
  if (b1 < b2) {
    const Moments noisy = interval_moments(model, b1, b2, method);
    distortion += 2.0 / (chan.gamma() + 1.0) * noisy.var * noisy.prob;
    comm += 2.0 * costs.c1 * noisy.prob;
  }
  if (b2 < kInf) {
    const double p2 = method == MomentMethod::ClosedForm ? model.survival(b2)
                                                         : interval_moments(model, b2, kInf, method).prob;
    comm += 2.0 * costs.c2 * p2;
  }
  return {pol, distortion + comm, distortion, comm};
}

// Partial derivatives of the stage cost in beta1 and beta2 at an interior point.
inline std::pair<double, double> stage_cost_grad(const SourceModel& model, const ChannelSpec& chan,
                                                 const CostPair& costs, const ThresholdPolicy& pol) {
  pol.validate();
  require(pol.beta1 > 0.0 && pol.beta1 < pol.beta2 && pol.beta2 < kInf, Errc::UnsupportedBoundary,
          "stage_cost_grad: needs 0 < beta1 < beta2 < inf");
  const double shrink = 1.0 / (chan.gamma() + 1.0);
  const double m = truncated_mean(model, Region::interval(pol.beta1, pol.beta2));
  const double d1 = pol.beta1 - m;
  const double d2 = pol.beta2 - m;
  const double g1 = 2.0 * model.density(pol.beta1) * (pol.beta1 * pol.beta1 - shrink * d1 * d1 - costs.c1);
  const double g2 = 2.0 * model.density(pol.beta2) * (shrink * d2 * d2 + costs.c1 - costs.c2);
  return {g1, g2};
}

// The two first-order conditions with the density factors removed.
inline std::pair<double, double> foc_residuals(const SourceModel& model, double gamma, const CostPair& costs,
                                               const ThresholdPolicy& pol,
                                               MomentMethod method = MomentMethod::ClosedForm) {
  const double shrink = 1.0 / (gamma + 1.0);
  const Moments noisy = interval_moments(model, pol.beta1, pol.beta2, method);
  require(noisy.prob > 0.0, Errc::ZeroProbabilityRegion, "foc_residuals: empty noisy region");
  const double d1 = pol.beta1 - noisy.mean;
  const double d2 = pol.beta2 - noisy.mean;
  return {pol.beta1 * pol.beta1 - shrink * d1 * d1 - costs.c1, shrink * d2 * d2 + costs.c1 - costs.c2};
}

// phi(x) = x e^{lx} / (e^{lx} - 1) = x / (1 - e^{-lx}); increasing from 1/l at 0+.
inline double phi(double x, double lambda) {
  require(lambda > 0.0, Errc::InvalidArgument, "phi: lambda must be > 0");
  require(x >= 0.0, Errc::InvalidArgument, "phi: x must be >= 0");
  const double u = lambda * x;
  if (u < 1e-4) return (1.0 + u / 2.0 + u * u / 12.0) / lambda;
  return x / -std::expm1(-u);
}

inline double phi_derivative(double x, double lambda) {
  const double u = lambda * x;
  if (u < 1e-4) return 0.5 + u / 6.0;
  const double den = -std::expm1(-u);
  return (den - u * std::exp(-u)) / (den * den);
}

inline double phi_solve(double target, double lambda) {
  require(lambda > 0.0, Errc::InvalidArgument, "phi_solve: lambda must be > 0");
  require(target > 1.0 / lambda, Errc::TargetOutOfRange, "phi_solve: target must exceed 1/lambda");
  // phi(x) > x, so target itself brackets the root from above
  auto fdf = [&](double x) { return std::pair{phi(x, lambda) - target, phi_derivative(x, lambda)}; };
  return numerics::newton_bisect(fdf, 0.0, target).x;
}

// Which channels the sensor may use at this stage.
struct Availability {
  bool noisy = true;
  bool perfect = true;
};

// Closed-form optimal thresholds for a Laplace(0, 1/lambda) source.
//   both, c1 < c2 : fixed point phi(db) = 1/l + s with s = sqrt((c2-c1)(1+g)),
//                   beta1 = sqrt(c1 + (db - s)^2/(g+1)), beta2 = beta1 + db
//   both, c1 >= c2: perfect channel only
//   noisy only    : beta1 = sqrt(c1 + 1/((g+1) l^2)), beta2 = inf
//   perfect only  : beta1 = beta2 = sqrt(c2)
//   neither       : silence
inline ThresholdPolicy solve_thresholds_laplace(double lambda, double gamma, const CostPair& costs,
                                                Availability avail = {}) {
  require(std::isfinite(lambda) && lambda > 0.0, Errc::InvalidArgument, "solve_thresholds_laplace: lambda > 0");
  require(std::isfinite(gamma) && gamma > 0.0, Errc::InvalidArgument, "solve_thresholds_laplace: gamma > 0");
  costs.validate();
  if (!avail.noisy && !avail.perfect) return ThresholdPolicy::silence();
  if (!avail.noisy || (avail.perfect && costs.c1 >= costs.c2)) {
    const double b = std::sqrt(costs.c2);
    return {b, b};
  }
  if (!avail.perfect) {
    return {std::sqrt(costs.c1 + 1.0 / ((gamma + 1.0) * lambda * lambda)), kInf};
  }
  const double s = std::sqrt((costs.c2 - costs.c1) * (1.0 + gamma));
  const double target = 1.0 / lambda + s;
  if (!(target > 1.0 / lambda)) {  // c2 - c1 below resolution: noisy band has zero width
    const double b = std::sqrt(costs.c2);
    return {b, b};
  }
  const double width = phi_solve(target, lambda);
  const double lead = width - s;  // E[X | band] - beta1 >= 0
  const double beta1 = std::sqrt(costs.c1 + lead * lead / (gamma + 1.0));
  return {beta1, beta1 + width};
}

struct GenericSolution {
  ThresholdPolicy policy;
  double cost = 0.0;
  bool stationary = false;  // an interior stationary point was selected
  bool certified = false;   // no uniqueness theorem outside the Laplace family
};

namespace detail {

inline double search_upper(const SourceModel& model) {
  const double hi = model.support().second;
  return std::isinf(hi) ? model.survival_quantile(1e-9) : hi;
}

// Root of the first condition with the perfect channel switched off (beta2 = inf).
inline std::optional<double> noisy_only_root(const SourceModel& model, double gamma, double c1,
                                             MomentMethod method) {
  const double shrink = 1.0 / (gamma + 1.0);
  auto h = [&](double b1) {
    const Moments m = interval_moments(model, b1, kInf, method);
    if (m.prob <= 0.0) return b1 * b1 - c1;
    const double d = b1 - m.mean;
    return b1 * b1 - shrink * d * d - c1;
  };
  double lo = 0.0;
  double hi = search_upper(model);
  if (h(lo) > 0.0 || h(hi) < 0.0) return std::nullopt;
  for (int it = 0; it < 200 && hi - lo > 1e-15 * std::max(1.0, hi); ++it) {
    const double mid = 0.5 * (lo + hi);
    (h(mid) < 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

// Damped Newton on the two first-order conditions with a finite-difference Jacobian.
inline std::optional<ThresholdPolicy> newton_foc(const SourceModel& model, double gamma, const CostPair& costs,
                                                 double b1, double b2, MomentMethod method) {
  auto residual = [&](double x1, double x2) -> std::optional<std::array<double, 2>> {
    if (!(x1 >= 0.0 && x1 < x2)) return std::nullopt;
    const Moments m = interval_moments(model, x1, x2, method);
    if (m.prob <= 0.0) return std::nullopt;
    const double shrink = 1.0 / (gamma + 1.0);
    const double d1 = x1 - m.mean;
    const double d2 = x2 - m.mean;
    return std::array<double, 2>{x1 * x1 - shrink * d1 * d1 - costs.c1, shrink * d2 * d2 + costs.c1 - costs.c2};
  };
  auto norm2 = [](const std::array<double, 2>& r) { return r[0] * r[0] + r[1] * r[1]; };

  auto r = residual(b1, b2);
  if (!r) return std::nullopt;
  for (int it = 0; it < 100; ++it) {
    if (std::sqrt(norm2(*r)) < 1e-11) return ThresholdPolicy{b1, b2};
    const double h1 = 1e-7 * std::max(1.0, b1);
    const double h2 = 1e-7 * std::max(1.0, b2);
    auto r1 = residual(b1 + h1, b2);
    auto r2 = residual(b1, b2 + h2);
    if (!r1 || !r2) return std::nullopt;
    const double j11 = ((*r1)[0] - (*r)[0]) / h1;
    const double j21 = ((*r1)[1] - (*r)[1]) / h1;
    const double j12 = ((*r2)[0] - (*r)[0]) / h2;
    const double j22 = ((*r2)[1] - (*r)[1]) / h2;
    const double det = j11 * j22 - j12 * j21;
    if (!std::isfinite(det) || det == 0.0) return std::nullopt;
    const double s1 = -((*r)[0] * j22 - (*r)[1] * j12) / det;
    const double s2 = -(j11 * (*r)[1] - j21 * (*r)[0]) / det;
    double t = 1.0;
    bool moved = false;
    for (int ls = 0; ls < 40; ++ls, t *= 0.5) {
      const double n1 = b1 + t * s1;
      const double n2 = b2 + t * s2;
      auto rn = residual(n1, n2);
      if (rn && norm2(*rn) < norm2(*r)) {
        b1 = n1;
        b2 = n2;
        r = rn;
        moved = true;
        break;
      }
    }
    if (!moved) break;
  }
  if (std::sqrt(norm2(*r)) < 1e-9) return ThresholdPolicy{b1, b2};
  return std::nullopt;
}

}  // namespace detail

// Optimal thresholds for any symmetric unimodal source, found from the first-order
// conditions by multi-start Newton plus the boundary strategies, then checked
// against a coarse grid of the stage cost.
inline GenericSolution solve_thresholds_generic(const SourceModel& model, double gamma, const CostPair& costs,
                                                MomentMethod method = MomentMethod::Quadrature) {
  require(std::isfinite(gamma) && gamma > 0.0, Errc::InvalidArgument, "solve_thresholds_generic: gamma > 0");
  costs.validate();
  const ChannelSpec chan = ChannelSpec::from_snr(gamma);
  auto cost_of = [&](const ThresholdPolicy& p) { return stage_cost(model, chan, costs, p, method).cost; };

  if (costs.c1 >= costs.c2) {
    const double b = std::sqrt(costs.c2);
    const ThresholdPolicy p{b, b};
    return {p, cost_of(p), false, false};
  }

  GenericSolution best{ThresholdPolicy::silence(), cost_of(ThresholdPolicy::silence()), false, false};
  auto consider = [&](const ThresholdPolicy& p, bool stationary) {
    const double c = cost_of(p);
    if (c < best.cost) best = {p, c, stationary, false};
  };

  const double root_c2 = std::sqrt(costs.c2);
  consider({root_c2, root_c2}, false);
  if (auto b1 = detail::noisy_only_root(model, gamma, costs.c1, method)) consider({*b1, kInf}, false);

  const double scale = std::sqrt(model.variance());
  constexpr std::array<double, 4> kLead = {0.05, 0.2, 0.8, 3.2};
  constexpr std::array<double, 2> kSpread = {0.5, 3.0};
  for (double lead : kLead) {
    for (double spread : kSpread) {
      const double b1 = lead * scale;
      if (auto p = detail::newton_foc(model, gamma, costs, b1, b1 + spread * scale, method)) consider(*p, true);
    }
  }

  // coarse grid cross-check
  constexpr int kGrid = 80;
  const double upper = detail::search_upper(model);
  const double step = upper / kGrid;
  ThresholdPolicy grid_best = ThresholdPolicy::silence();
  double grid_cost = cost_of(grid_best);
  for (int i = 0; i <= kGrid; ++i) {
    const double b1 = i * step;
    for (int j = i; j <= kGrid + 1; ++j) {
      const ThresholdPolicy p{b1, j > kGrid ? kInf : j * step};
      const double c = cost_of(p);
      if (c < grid_cost) {
        grid_cost = c;
        grid_best = p;
      }
    }
  }
  const double slack = 1e-9 * (1.0 + std::abs(best.cost));
  if (grid_cost < best.cost - slack) {
    if (grid_best.uses_noisy() && grid_best.uses_perfect()) {
      if (auto p = detail::newton_foc(model, gamma, costs, std::max(grid_best.beta1, step / 2), grid_best.beta2,
                                      method)) {
        consider(*p, true);
      }
    }
    if (grid_cost < best.cost - slack) {
      throw Error(Errc::NonConvergence, "solve_thresholds_generic: grid search beats every stationary point");
    }
  }
  return best;
}

}  // namespace remest
