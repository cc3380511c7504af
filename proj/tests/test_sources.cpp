#include <algorithm>
#include <array>
#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "oracle.hpp"
#include "remest/sources.hpp"

using namespace remest;

namespace {

const SourceModel lap1 = SourceModel::laplace(1.0);
const SourceModel uni1 = SourceModel::uniform(1.0);

TEST(Density, Values) {
  EXPECT_DOUBLE_EQ(density(lap1, 0.0), 0.5);
  EXPECT_DOUBLE_EQ(density(lap1, -2.0), density(lap1, 2.0));
  EXPECT_DOUBLE_EQ(density(uni1, 0.3), 0.5);
  EXPECT_DOUBLE_EQ(density(uni1, 1.5), 0.0);
}

TEST(Density, InvalidParameters) {
  EXPECT_THROW(SourceModel::laplace(0.0), Error);
  EXPECT_THROW(SourceModel::laplace(-1.0), Error);
  EXPECT_THROW(SourceModel::uniform(std::nan("")), Error);
}

TEST(RegionProb, Examples) {
  EXPECT_NEAR(region_prob(uni1, Region::interval(0.0, 0.5)), 0.25, 1e-15);
  const double tail = oracle::moments(oracle::laplace(1.0), 1.0, oracle::inf).prob;
  EXPECT_NEAR(tail, 0.183940, 1e-6);
  EXPECT_NEAR(region_prob(lap1, Region::interval(1.0, kInf)), tail, 1e-13);
  EXPECT_NEAR(region_prob(lap1, Region::real_line()), 1.0, 1e-15);
  EXPECT_NEAR(region_prob(uni1, Region::real_line()), 1.0, 1e-15);
}

TEST(RegionProb, ComplementSumsToOne) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-4.0, 4.0);
  for (int i = 0; i < 200; ++i) {
    double a = u(rng), b = u(rng), c = u(rng), d = u(rng);
    std::array<double, 4> e{a, b, c, d};
    std::sort(e.begin(), e.end());
    const Region r({Interval{e[0], e[1]}, Interval{e[2], e[3]}});
    for (const SourceModel& m : {lap1, SourceModel::laplace(2.5), uni1, SourceModel::uniform(3.0)}) {
      EXPECT_NEAR(region_prob(m, r) + region_prob(m, r.complement()), 1.0, 1e-10);
    }
  }
}

TEST(TruncatedMean, Examples) {
  EXPECT_NEAR(truncated_mean(lap1, Region::band(1.3)), 0.0, 1e-15);
  EXPECT_NEAR(truncated_mean(lap1, Region::interval(0.0, kInf)), 1.0, 1e-15);
  EXPECT_NEAR(truncated_mean(lap1, Region::interval(0.0, kInf)),
              oracle::moments(oracle::laplace(1.0), 0.0, oracle::inf).mean, 1e-12);
  EXPECT_NEAR(truncated_mean(uni1, Region::interval(0.2, 0.6)), 0.4, 1e-15);
}

TEST(TruncatedMean, SymmetricRegionsAreCentred) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 5.0);
  for (int i = 0; i < 200; ++i) {
    double a = u(rng), b = u(rng);
    if (a > b) std::swap(a, b);
    if (b - a < 1e-6) continue;
    const Region r = Region::symmetric_pair(a, b);
    EXPECT_LT(std::abs(truncated_mean(lap1, r)), 1e-12);
    EXPECT_LT(std::abs(truncated_mean(SourceModel::uniform(6.0), r)), 1e-12);
  }
}

TEST(TruncatedVar, Examples) {
  EXPECT_NEAR(truncated_var(uni1, Region::interval(-0.3, 0.7)), 1.0 / 12.0, 1e-15);
  EXPECT_NEAR(truncated_var(lap1, Region::interval(1.0, kInf)), 1.0, 1e-14);
  EXPECT_NEAR(truncated_var(lap1, Region::real_line()), 2.0, 1e-14);
  const oracle::Mom tail = oracle::moments(oracle::laplace(1.0), 1.0, oracle::inf);
  EXPECT_NEAR(tail.var, 1.0, 1e-10);
}

TEST(TruncatedMoments, ZeroMassThrows) {
  try {
    (void)truncated_mean(uni1, Region::interval(2.0, 3.0));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::ZeroProbabilityRegion);
  }
  EXPECT_THROW((void)truncated_var(lap1, Region::band(0.0)), Error);
}

// Closed form against an independent quadrature on random Laplace intervals.
TEST(TruncatedMoments, ClosedFormMatchesQuadrature) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-6.0, 6.0);
  std::uniform_real_distribution<double> lam(0.3, 3.0);
  for (int i = 0; i < 200; ++i) {
    double a = u(rng), b = u(rng);
    if (a > b) std::swap(a, b);
    if (i % 10 == 0) b = kInf;
    if (b - a < 1e-3) continue;
    const double l = lam(rng);
    const SourceModel m = SourceModel::laplace(l);
    const oracle::Mom ref = oracle::moments(oracle::laplace(l), a, b);
    const Moments cf = region_moments(m, Region::interval(a, b));
    const Moments qd = region_moments(m, Region::interval(a, b), MomentMethod::Quadrature);
    EXPECT_NEAR(cf.mean, ref.mean, 1e-9) << a << " " << b << " " << l;
    EXPECT_NEAR(cf.prob, ref.prob, 1e-12);
    EXPECT_NEAR(cf.var, ref.var, 1e-9 * std::max(1.0, ref.var));
    EXPECT_NEAR(qd.mean, ref.mean, 1e-9);
    EXPECT_NEAR(qd.var, ref.var, 1e-9 * std::max(1.0, ref.var));
  }
}

TEST(TruncatedMoments, NarrowIntervalsStayAccurate) {
  for (double w : {1e-2, 1e-4, 1e-6, 1e-8}) {
    const Moments m = region_moments(lap1, Region::interval(1.0, 1.0 + w));
    EXPECT_NEAR(m.var, w * w / 12.0, 1e-6 * w * w) << w;
    EXPECT_NEAR(m.mean, 1.0 + w / 2.0 - w * w / 12.0, 1e-3 * w * w) << w;
  }
}

TEST(Sample, Reproducible) {
  std::mt19937_64 a(42), b(42);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(sample(lap1, a), sample(lap1, b));
}

TEST(Sample, LaplaceVariance) {
  std::mt19937_64 rng(2024);
  const int n = 1000000;
  double s = 0.0, s2 = 0.0, s4 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = sample(lap1, rng);
    s += x;
    s2 += x * x;
    s4 += x * x * x * x;
  }
  const double m2 = s2 / n;
  const double se = std::sqrt((s4 / n - m2 * m2) / n);
  EXPECT_NEAR(m2, 2.0, 4.0 * se);
  EXPECT_NEAR(s / n, 0.0, 4.0 * std::sqrt(2.0 / n));
}

TEST(Sample, UniformSupport) {
  std::mt19937_64 rng(5);
  for (int i = 0; i < 1000000; ++i) {
    const double x = sample(uni1, rng);
    ASSERT_GE(x, -1.0);
    ASSERT_LE(x, 1.0);
  }
}

TEST(Sample, TruncatedStaysInside) {
  std::mt19937_64 rng(8);
  for (int i = 0; i < 10000; ++i) {
    const double x = sample_truncated(lap1, 0.5, 2.0, rng);
    ASSERT_GE(x, 0.5);
    ASSERT_LE(x, 2.0);
    const double y = sample_truncated(lap1, -1.0, 0.25, rng);
    ASSERT_GE(y, -1.0);
    ASSERT_LE(y, 0.25);
  }
}

TEST(ShiftedInterval, Examples) {
  EXPECT_NEAR(shifted_interval(uni1, 0.1, 0.2, 0.3), 0.4, 1e-12);
  EXPECT_DOUBLE_EQ(shifted_interval(lap1, 0.0, 0.0, 1.7), 1.7);
  const double b2p = shifted_interval(lap1, 0.5, 1.0, 1.0);
  EXPECT_NEAR(std::exp(-1.0) - std::exp(-b2p), std::exp(-0.5) - std::exp(-1.0), 1e-14);
  EXPECT_NEAR(b2p, -std::log(2.0 * std::exp(-1.0) - std::exp(-0.5)), 1e-12);
}

TEST(ShiftedInterval, Infeasible) {
  try {
    (void)shifted_interval(uni1, 0.0, 0.8, 0.5);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::InfeasibleShift);
  }
  EXPECT_THROW((void)shifted_interval(lap1, 0.5, 0.2, 1.0), Error);
}

// Probability-preserving rightward shifts never reduce the conditional variance.
TEST(ShiftedInterval, VarianceNeverDecreases) {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 500; ++i) {
    const bool lap = i % 2 == 0;
    const SourceModel m = lap ? SourceModel::laplace(0.5 + 2.0 * u(rng)) : SourceModel::uniform(0.5 + 2.0 * u(rng));
    const double top = lap ? 6.0 / m.lambda() : m.half_width();
    double b1 = top * u(rng), b2 = top * u(rng);
    if (b1 > b2) std::swap(b1, b2);
    if (b2 - b1 < 1e-4 * top) continue;
    const double mass = m.survival(b1) - m.survival(b2);
    // b1' ranges up to the point with exactly `mass` left to its right
    const double b1_max = lap ? m.survival_quantile(mass) : m.half_width() - 2.0 * m.half_width() * mass;
    const double b1p = b1 + (b1_max - b1) * u(rng) * 0.999;
    const double b2p = shifted_interval(m, b1, b1p, b2);
    EXPECT_NEAR(m.survival(b1p) - m.survival(b2p), mass, 1e-12);
    const double v0 = truncated_var(m, Region::interval(b1, b2));
    const double v1 = truncated_var(m, Region::interval(b1p, b2p));
    EXPECT_GE(v1, v0 * (1.0 - 1e-10)) << b1 << " " << b2 << " -> " << b1p << " " << b2p;
  }
}

// d/d eta1 of Var*Prob = -p(eta1)(eta1 - m)^2, d/d eta2 = +p(eta2)(eta2 - m)^2.
TEST(ShiftedInterval, VarianceDerivativeIdentities) {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  const double h = 1e-5;
  for (int i = 0; i < 200; ++i) {
    double a = u(rng), b = u(rng);
    if (a > b) std::swap(a, b);
    if (b - a < 0.05) continue;
    auto vp = [&](double lo, double hi) {
      const Moments mm = region_moments(lap1, Region::interval(lo, hi));
      return mm.var * mm.prob;
    };
    const double m = truncated_mean(lap1, Region::interval(a, b));
    const double d1 = -density(lap1, a) * (a - m) * (a - m);
    const double d2 = density(lap1, b) * (b - m) * (b - m);
    const double fd1 = (vp(a + h, b) - vp(a - h, b)) / (2.0 * h);
    const double fd2 = (vp(a, b + h) - vp(a, b - h)) / (2.0 * h);
    EXPECT_NEAR(fd1, d1, 1e-4 * std::abs(d1) + 1e-9);
    EXPECT_NEAR(fd2, d2, 1e-4 * std::abs(d2) + 1e-9);
  }
}

TEST(Region, RejectsOverlap) {
  EXPECT_THROW(Region({Interval{0.0, 1.0}, Interval{0.5, 2.0}}), Error);
  EXPECT_THROW(Region({Interval{0.0, 1.0, false, false}, Interval{1.0, 2.0, false, false}}), Error);
  EXPECT_NO_THROW(Region({Interval{0.0, 1.0, false, false}, Interval{1.0, 2.0, true, false}}));
  EXPECT_THROW(Region::interval(2.0, 1.0), Error);
}

TEST(Region, ContainsHonoursOpenness) {
  const Region band = Region::band(1.0);
  EXPECT_TRUE(band.contains(1.0));
  EXPECT_TRUE(band.contains(-1.0));
  const Region c = band.complement();
  EXPECT_FALSE(c.contains(1.0));
  EXPECT_TRUE(c.contains(1.0000001));
  const Region pair = Region::symmetric_pair(0.5, 2.0);
  EXPECT_FALSE(pair.contains(0.5));
  EXPECT_TRUE(pair.contains(2.0));
  EXPECT_TRUE(pair.contains(-2.0));
  EXPECT_TRUE(pair.mirrored().contains(-2.0));
}

}  // namespace
