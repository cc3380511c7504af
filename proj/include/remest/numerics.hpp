#pragma once

// Scalar root finding and adaptive quadrature shared by the solver modules.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <queue>
#include <utility>
#include <vector>

#include "remest/error.hpp"

namespace remest {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

namespace numerics {

struct RootResult {
  double x = 0.0;
  double residual = 0.0;
  int iterations = 0;
};

// Root of an increasing function on [lo, hi] with f(lo) <= 0 <= f(hi).
// `fdf(x)` returns {f(x), f'(x)}. Newton steps that leave the bracket fall
// back to bisection; iteration stops when the bracket stops shrinking.
template <class Fdf>
RootResult newton_bisect(Fdf&& fdf, double lo, double hi, double ftol = 0.0, int max_iter = 400) {
  auto [flo, dlo] = fdf(lo);
  auto [fhi, dhi] = fdf(hi);
  (void)dlo;
  (void)dhi;
  if (flo > 0.0 || fhi < 0.0) {
    throw Error(Errc::NonConvergence, "newton_bisect: root not bracketed");
  }
  if (flo == 0.0) return {lo, 0.0, 0};
  if (fhi == 0.0) return {hi, 0.0, 0};

  double x = 0.5 * (lo + hi);
  RootResult best{x, kInf, 0};
  for (int it = 1; it <= max_iter; ++it) {
    auto [f, df] = fdf(x);
    if (std::abs(f) < std::abs(best.residual)) best = {x, f, it};
    if (f == 0.0 || std::abs(f) <= ftol) return {x, f, it};
    if (f < 0.0) {
      lo = x;
    } else {
      hi = x;
    }
    double next = (df > 0.0 && std::isfinite(df)) ? x - f / df : lo - 1.0;
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (next == x || next == lo || next == hi) {
      // bracket exhausted at double precision
      best.iterations = it;
      return best;
    }
    x = next;
  }
  best.iterations = max_iter;
  return best;
}

namespace detail {

// 15-point Gauss-Kronrod abscissae/weights with the embedded 7-point Gauss rule.
inline constexpr std::array<double, 8> kXgk = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
inline constexpr std::array<double, 8> kWgk = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr std::array<double, 4> kWg = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Panel {
  double a, b, value, error;
  bool operator<(const Panel& o) const { return error < o.error; }
};

template <class F>
Panel gk15(F& f, double a, double b) {
  const double c = 0.5 * (a + b);
  const double h = 0.5 * (b - a);
  const double fc = f(c);
  double kron = fc * kWgk[7];
  double gauss = fc * kWg[3];
  for (int j = 0; j < 7; ++j) {
    const double dx = h * kXgk[j];
    const double s = f(c - dx) + f(c + dx);
    kron += kWgk[j] * s;
    if (j % 2 == 1) gauss += kWg[j / 2] * s;
  }
  return {a, b, kron * h, std::abs((kron - gauss) * h)};
}

template <class F>
double adaptive_finite(F& f, double a, double b, double abs_tol, double rel_tol, int max_panels) {
  if (a == b) return 0.0;
  std::priority_queue<Panel> heap;
  Panel first = gk15(f, a, b);
  double total = first.value;
  double err = first.error;
  heap.push(first);
  int panels = 1;
  while (err > std::max(abs_tol, rel_tol * std::abs(total)) && panels < max_panels) {
    Panel p = heap.top();
    heap.pop();
    const double mid = 0.5 * (p.a + p.b);
    if (mid <= p.a || mid >= p.b) {  // cannot split further
      heap.push({p.a, p.b, p.value, 0.0});
      err -= p.error;
      continue;
    }
    Panel l = gk15(f, p.a, mid);
    Panel r = gk15(f, mid, p.b);
    total += l.value + r.value - p.value;
    err += l.error + r.error - p.error;
    heap.push(l);
    heap.push(r);
    ++panels;
  }
  // re-sum to shed accumulated update drift
  double sum = 0.0;
  while (!heap.empty()) {
    sum += heap.top().value;
    heap.pop();
  }
  return sum;
}

}  // namespace detail

struct QuadTolerance {
  double abs_tol = 1e-12;
  double rel_tol = 1e-10;
  int max_panels = 4000;
};

// Adaptive Gauss-Kronrod on [a, b], where either end may be infinite.
// Infinite ends are mapped onto a finite parameter range by x = a + t/(1-t).
template <class F>
double integrate(F f, double a, double b, QuadTolerance tol = {}) {
  if (!(a < b)) return 0.0;
  const bool a_inf = std::isinf(a);
  const bool b_inf = std::isinf(b);
  if (!a_inf && !b_inf) return detail::adaptive_finite(f, a, b, tol.abs_tol, tol.rel_tol, tol.max_panels);
  if (a_inf && b_inf) return integrate(f, -kInf, 0.0, tol) + integrate(f, 0.0, kInf, tol);
  if (b_inf) {
    auto g = [&](double t) {
      const double one_minus = 1.0 - t;
      if (one_minus <= 0.0) return 0.0;
      const double x = a + t / one_minus;
      const double v = f(x) / (one_minus * one_minus);
      return std::isfinite(v) ? v : 0.0;
    };
    return detail::adaptive_finite(g, 0.0, 1.0, tol.abs_tol, tol.rel_tol, tol.max_panels);
  }
  auto g = [&](double t) {
    const double one_minus = 1.0 - t;
    if (one_minus <= 0.0) return 0.0;
    const double x = b - t / one_minus;
    const double v = f(x) / (one_minus * one_minus);
    return std::isfinite(v) ? v : 0.0;
  };
  return detail::adaptive_finite(g, 0.0, 1.0, tol.abs_tol, tol.rel_tol, tol.max_panels);
}

}  // namespace numerics
}  // namespace remest
