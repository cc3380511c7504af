#pragma once

// Reference computations for the tests. Everything here is written from the
// densities directly and integrated with Boost.Math, so it shares no code with
// the library beyond plain arithmetic.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace oracle {

inline constexpr double inf = std::numeric_limits<double>::infinity();

struct Density {
  bool laplace = true;
  double lambda = 1.0;
  double L = 1.0;

  double operator()(double x) const {
    if (laplace) return 0.5 * lambda * std::exp(-lambda * std::abs(x));
    return std::abs(x) <= L ? 0.5 / L : 0.0;
  }
  double lo() const { return laplace ? -inf : -L; }
  double hi() const { return laplace ? inf : L; }
};

inline Density laplace(double lambda) { return {true, lambda, 1.0}; }
inline Density uniform(double L) { return {false, 1.0, L}; }

// Integral of f over [a, b] against nothing; splits at 0 where densities kink.
inline double integral(const std::function<double(double)>& f, double a, double b) {
  using boost::math::quadrature::gauss_kronrod;
  if (!(a < b)) return 0.0;
  auto piece = [&](double p, double q) {
    if (!(p < q)) return 0.0;
    return gauss_kronrod<double, 61>::integrate(f, p, q, 15, 1e-14);
  };
  if (a < 0.0 && b > 0.0) return piece(a, 0.0) + piece(0.0, b);
  return piece(a, b);
}

struct Mom {
  double prob = 0.0;
  double mean = 0.0;
  double var = 0.0;
};

// Moments of X restricted to a union of disjoint intervals.
inline Mom moments(const Density& p, const std::vector<std::pair<double, double>>& pieces) {
  auto over = [&](const std::function<double(double)>& g) {
    double s = 0.0;
    for (auto [a, b] : pieces) {
      const double lo = std::max(a, p.lo());
      const double hi = std::min(b, p.hi());
      s += integral([&](double x) { return g(x) * p(x); }, lo, hi);
    }
    return s;
  };
  Mom m;
  m.prob = over([](double) { return 1.0; });
  if (m.prob <= 0.0) return m;
  m.mean = over([](double x) { return x; }) / m.prob;
  m.var = over([&](double x) { return (x - m.mean) * (x - m.mean); }) / m.prob;
  return m;
}

inline Mom moments(const Density& p, double a, double b) { return moments(p, {{a, b}}); }

// Single-stage cost of the symmetric threshold pair with the sign side channel:
// silence on [-b1, b1], noisy on b1 < |x| <= b2 (each side coded on its own), perfect beyond.
inline double stage_cost(const Density& p, double gamma, double c1, double c2, double b1, double b2) {
  double j = 0.0;
  j += integral([&](double x) { return x * x * p(x); }, std::max(-b1, p.lo()), std::min(b1, p.hi()));
  if (b2 > b1) {
    const Mom side = moments(p, b1, b2);
    j += 2.0 * side.prob * (c1 + side.var / (gamma + 1.0));
  }
  if (b2 < p.hi()) j += 2.0 * c2 * moments(p, b2, p.hi()).prob;
  return j;
}

// Laplace closed forms used as hand enumeration.
// Integral of x^2 e^{-x} over [0, b].
inline double x2_exp_integral(double b) { return 2.0 - std::exp(-b) * (b * b + 2.0 * b + 2.0); }

// Stage cost for Laplace(0, 1/lambda) from elementary antiderivatives of x^k e^{-lambda x}.
inline double laplace_stage_cost(double lambda, double gamma, double c1, double c2, double b1, double b2) {
  const double l = lambda;
  auto e = [&](double x) { return std::isinf(x) ? 0.0 : std::exp(-l * x); };
  auto P = [&](double a, double b) { return 0.5 * (e(a) - e(b)); };
  auto M1 = [&](double a, double b) {
    auto F = [&](double x) { return std::isinf(x) ? 0.0 : -(x + 1.0 / l) * e(x); };
    return 0.5 * (F(b) - F(a));
  };
  auto M2 = [&](double a, double b) {
    auto F = [&](double x) { return std::isinf(x) ? 0.0 : -(x * x + 2.0 * x / l + 2.0 / (l * l)) * e(x); };
    return 0.5 * (F(b) - F(a));
  };
  double j = 2.0 * M2(0.0, b1);
  if (b2 > b1) {
    const double p = P(b1, b2);
    if (p > 0.0) {
      const double m1 = M1(b1, b2);
      j += 2.0 * c1 * p + 2.0 / (gamma + 1.0) * (M2(b1, b2) - m1 * m1 / p);
    }
  }
  j += c2 * e(b2);
  return j;
}

// Uniform on [-L, L], same policy structure.
inline double uniform_stage_cost(double L, double gamma, double c1, double c2, double b1, double b2) {
  b1 = std::min(b1, L);
  b2 = std::min(b2, L);
  const double w = b2 - b1;
  return b1 * b1 * b1 / (3.0 * L) + (w / L) * (c1 + w * w / 12.0 / (gamma + 1.0)) + c2 * (L - b2) / L;
}

// Minimum of f on [lo, hi] by golden-section search.
inline double golden_min(const std::function<double(double)>& f, double lo, double hi, double tol = 1e-12) {
  const double g = 0.5 * (std::sqrt(5.0) - 1.0);
  double a = lo, b = hi;
  double c = b - g * (b - a), d = a + g * (b - a);
  double fc = f(c), fd = f(d);
  while (b - a > tol) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - g * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + g * (b - a);
      fd = f(d);
    }
  }
  return 0.5 * (a + b);
}

// Value of the two-stage problem for Laplace(0, 1/lambda) by enumerating every
// threshold pair on a grid (step h up to `top`, plus infinity) at both stages.
// A channel with no budget left is forced out of the policy.
inline double brute_force_two_stage(double lambda, double gamma, int n1, int n2, double h, double top) {
  std::vector<double> grid;
  for (double b = 0.0; b <= top + 1e-12; b += h) grid.push_back(b);
  grid.push_back(inf);
  auto e = [&](double x) { return std::isinf(x) ? 0.0 : 0.5 * std::exp(-lambda * x); };

  // best last-stage distortion for each remaining budget pair
  auto last_stage = [&](int a, int p) {
    double best = inf;
    for (std::size_t i = 0; i < grid.size(); ++i) {
      for (std::size_t j = i; j < grid.size(); ++j) {
        const double b1 = grid[i], b2 = grid[j];
        if (a == 0 && b1 < b2) continue;
        if (p == 0 && b2 < inf) continue;
        best = std::min(best, laplace_stage_cost(lambda, gamma, 0.0, 0.0, b1, b2));
      }
    }
    return best;
  };
  double v2[2][2];
  for (int a = 0; a <= std::min(n1, 1); ++a) {
    for (int p = 0; p <= std::min(n2, 1); ++p) v2[a][p] = last_stage(a, p);
  }
  double best = inf;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    for (std::size_t j = i; j < grid.size(); ++j) {
      const double b1 = grid[i], b2 = grid[j];
      if (n1 == 0 && b1 < b2) continue;
      if (n2 == 0 && b2 < inf) continue;
      const double p1 = 2.0 * (e(b1) - e(b2));
      const double p2 = 2.0 * e(b2);
      const double p0 = 1.0 - p1 - p2;
      double j_total = laplace_stage_cost(lambda, gamma, 0.0, 0.0, b1, b2) + p0 * v2[std::min(n1, 1)][std::min(n2, 1)];
      if (p1 > 0.0) j_total += p1 * v2[n1 - 1][std::min(n2, 1)];
      if (p2 > 0.0) j_total += p2 * v2[std::min(n1, 1)][n2 - 1];
      best = std::min(best, j_total);
    }
  }
  return best;
}

// Cost-to-go with only the perfect channel: V[t][p] for t = 1..T+1, minimised by golden section.
inline std::vector<std::vector<double>> perfect_only_dp(int T, int P, double lambda) {
  std::vector<std::vector<double>> v(static_cast<std::size_t>(T) + 2, std::vector<double>(P + 1, 0.0));
  const double var = 2.0 / (lambda * lambda);
  for (int t = T; t >= 1; --t) {
    for (int p = 0; p <= P; ++p) {
      if (p == 0) {
        v[t][p] = v[t + 1][p] + var;
        continue;
      }
      const double c2 = v[t + 1][p - 1] - v[t + 1][p];
      auto f = [&](double b) { return laplace_stage_cost(lambda, 1.0, 0.0, c2, b, b); };
      const double hi = 40.0 / lambda;
      const double b = golden_min(f, 0.0, hi, 1e-10);
      v[t][p] = v[t + 1][p] + std::min({f(b), f(0.0), var});
    }
  }
  return v;
}

}  // namespace oracle
