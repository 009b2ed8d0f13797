#include "rare_reach/oracle.hpp"

#include <cmath>
#include <numbers>
#include <vector>

#include <gtest/gtest.h>

#include "rare_reach/error.hpp"
#include "support.hpp"

using namespace rare_reach;
using namespace rare_reach::oracle;

TEST(WalkDp, ShortestPathProbability) {
  const double p = 0.45;
  const auto dp = exactWalkPassage(p, 3, 3);
  EXPECT_EQ(dp.at(2), 0.0);
  EXPECT_NEAR(dp.at(3), p * p * p, 1e-16);
  EXPECT_EQ(exactWalkPassage(p, 5, 4).at(4), 0.0);
}

TEST(WalkDp, MatchesEnumeration) {
  for (double p : {0.3, 0.45})
    for (int x : {1, 2, 5})
      for (int t = 0; t <= 16; ++t)
        EXPECT_NEAR(exactWalkPassage(p, x, t).at(t), enumerateWalkPassage(p, x, t), 1e-12)
            << "p = " << p << " x = " << x << " t = " << t;
}

TEST(WalkDp, MonotoneParityAndLimit) {
  const double p = 0.45, q = 0.55;
  const auto dp = exactWalkPassage(p, 5, 5000);
  for (int s = 1; s <= 5000; ++s) {
    ASSERT_GE(dp.at(s), dp.at(s - 1));
    // The walk sits at a position of the parity of s, so it can only first
    // reach 5 at odd times.
    if (s % 2 == 0) ASSERT_EQ(dp.at(s), dp.at(s - 1));
  }
  EXPECT_NEAR(dp.at(5000), std::pow(p / q, 5), 1e-9);
  EXPECT_LE(dp.at(5000), std::pow(p / q, 5));
  double mass = 0.0;
  for (double v : dp.interior) mass += v;
  EXPECT_NEAR(mass + dp.at(5000), 1.0, 1e-12);
}

TEST(WalkDp, SizeCap) {
  EXPECT_THROW(exactWalkPassage(0.45, 1000, 120000), SizeError);
  EXPECT_THROW(enumerateWalkPassage(0.45, 1, 25), SizeError);
}

TEST(WalkExit, GamblersRuin) {
  const auto r = exactWalkExit(0.45, 1, 3);
  EXPECT_NEAR(r.qUpper, 0.26910299, 1e-8);
  const auto fair = exactWalkExit(0.5, 3, 10);
  EXPECT_NEAR(fair.qUpper, 0.3, 1e-12);
  EXPECT_NEAR(fair.meanTime, 21.0, 1e-9);
}

TEST(WalkExit, MeanTimeMatchesValueIteration) {
  const double p = 0.45;
  const int x = 12;
  std::vector<double> m(x + 1, 0.0);
  for (int it = 0; it < 200000; ++it)
    for (int y = 1; y < x; ++y) m[y] = 1.0 + p * m[y + 1] + (1 - p) * m[y - 1];
  for (int y = 1; y < x; ++y) EXPECT_NEAR(exactWalkExit(p, y, x).meanTime, m[y], 1e-8);
}

TEST(QsdEigen, TwoStateClosedForm) {
  const auto r = qsdEigen({{0.5, 0.2}, {0.2, 0.5}});
  EXPECT_NEAR(r.eigenvalue, 0.7, 1e-12);
  EXPECT_NEAR(r.decayRate, -std::log(0.7), 1e-12);
  EXPECT_NEAR(r.nu[0], 0.5, 1e-12);
  const auto c = qsdEigen({{-3.0, 1.0}, {1.0, -3.0}}, TimeMode::Continuous);
  EXPECT_NEAR(c.eigenvalue, -2.0, 1e-10);
  EXPECT_NEAR(c.decayRate, 2.0, 1e-10);
}

TEST(QsdEigen, BirthDeathClosedForm) {
  // Left Perron vector of a killed lazy walk: (a/b)^{j/2} sin(j pi / (n+1)).
  const double a = 0.3, b = 0.4;
  const int n = 6;
  const auto r = qsdEigen(birthDeathKernel(n, a, b));
  std::vector<double> nu(n);
  double z = 0.0;
  for (int j = 1; j <= n; ++j) {
    nu[j - 1] = std::pow(a / b, 0.5 * j) * std::sin(j * std::numbers::pi / (n + 1));
    z += nu[j - 1];
  }
  for (int j = 0; j < n; ++j) EXPECT_NEAR(r.nu[j], nu[j] / z, 1e-10);
  EXPECT_NEAR(r.eigenvalue, 1 - a - b + 2 * std::sqrt(a * b) * std::cos(std::numbers::pi / (n + 1)),
              1e-12);
  EXPECT_LE(r.residual, 1e-12);
}

TEST(QsdEigen, DecayRateGrowsWhenTheIntervalShrinks) {
  double last = 0.0;
  for (int n : {20, 10, 5, 3}) {
    const double beta = qsdEigen(birthDeathKernel(n, 0.3, 0.4)).decayRate;
    EXPECT_GT(beta, last);
    last = beta;
  }
}

TEST(QsdEigen, ReportsNonConvergence) {
  EXPECT_THROW(qsdEigen(birthDeathKernel(30, 0.3, 0.4), TimeMode::Discrete, 1e-14, 3),
               ConvergenceError);
}

TEST(Quadrature, SmoothAndSingular) {
  EXPECT_NEAR(quadrature([](double x) { return std::sin(x); }, 0, std::numbers::pi, 1e-12), 2.0,
              1e-10);
  EXPECT_THROW(quadrature([](double x) { return 1.0 / std::sqrt(x); }, 0.0, 1.0, 1e-14, 6),
               ToleranceNotMet);
}

TEST(BrownianPassage, CdfAgainstInverseGaussianDensity) {
  const double mu = 0.2, sigma = 1.0, x = 10.0;
  const auto density = [&](double t) {
    if (t <= 0.0) return 0.0;
    return x / (sigma * std::sqrt(2 * std::numbers::pi * t * t * t)) *
           std::exp(-(x + mu * t) * (x + mu * t) / (2 * sigma * sigma * t));
  };
  for (double t : {5.0, 25.0, 100.0, 400.0})
    EXPECT_NEAR(brownianPassageCdf(mu, sigma, x, t), quadrature(density, 1e-9, t, 1e-13), 1e-10)
        << "t = " << t;
  EXPECT_NEAR(brownianPassageCdf(mu, sigma, x, 1e7), std::exp(-2 * mu * x), 1e-12);
}

TEST(BrownianExit, OptionalStoppingValue) {
  // (e^{2 mu y} - 1) / (e^{2 mu x} - 1), which is 1 / (1 + e^2) here.
  EXPECT_NEAR(brownianExitUpper(0.2, 1.0, 5.0, 10.0), 1.0 / (1.0 + std::exp(2.0)), 1e-14);
  EXPECT_NEAR(brownianExitUpper(0.2, 1.0, 5.0, 10.0), 0.119202922, 1e-9);
  EXPECT_NEAR(brownianExitUpper(0.2, 2.0, 5.0, 10.0),
              std::expm1(0.1 * 5) / std::expm1(0.1 * 10), 1e-14);
}

TEST(BrownianQsd, DensityCdfAndConstants) {
  const double mu = 0.2, x = 10.0;
  const double mass = quadrature([&](double y) { return brownianQsdDensity(mu, x, y); }, 0, x, 1e-13);
  EXPECT_NEAR(mass, 1.0, 1e-8);
  EXPECT_NEAR(brownianQsdNormalizer(mu, x), 0.388857130004729, 1e-12);
  for (double y : {0.5, 2.0, 5.0, 9.0})
    EXPECT_NEAR(brownianQsdCdf(mu, x, y),
                quadrature([&](double u) { return brownianQsdDensity(mu, x, u); }, 0, y, 1e-13),
                1e-10);
  EXPECT_NEAR(brownianQsdRate(mu, x), 0.069348022, 1e-9);
  EXPECT_NEAR(brownianQsdUpper(mu, x), 0.119202922, 1e-9);
  const double moment = quadrature(
      [&](double y) { return std::exp(2 * mu * y) * brownianQsdDensity(mu, x, y); }, 0, x, 1e-12);
  EXPECT_TRUE(testkit::relClose(moment, std::exp(mu * x), 1e-9));
}

TEST(BrownianQsd, MatchesDiscretizedGenerator) {
  // Killed nearest-neighbour chain with the same drift and variance per unit
  // time on a grid of mesh h.
  const double mu = 0.2, x = 10.0, h = 0.1;
  const int n = static_cast<int>(std::lround(x / h)) - 1;
  const double up = 0.5 / (h * h) - 0.5 * mu / h;
  const double down = 0.5 / (h * h) + 0.5 * mu / h;
  std::vector<std::vector<double>> gen(n, std::vector<double>(n, 0.0));
  for (int i = 0; i < n; ++i) {
    gen[i][i] = -(up + down);
    if (i + 1 < n) gen[i][i + 1] = up;
    if (i > 0) gen[i][i - 1] = down;
  }
  const auto r = qsdEigen(gen, TimeMode::Continuous, 1e-10);
  EXPECT_TRUE(testkit::relClose(r.decayRate, brownianQsdRate(mu, x), 2e-3));
  for (int i = 9; i < n; i += 20)
    EXPECT_NEAR(r.nu[i] / h, brownianQsdDensity(mu, x, (i + 1) * h), 2e-3);
}

TEST(FitLine, RecoversExactLine) {
  const auto f = fitLine({0, 1, 2, 3}, {1, 3, 5, 7});
  EXPECT_NEAR(f.slope, 2.0, 1e-14);
  EXPECT_NEAR(f.intercept, 1.0, 1e-14);
}
