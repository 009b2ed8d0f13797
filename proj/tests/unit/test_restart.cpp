#include "rare_reach/restart.hpp"

#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "rare_reach/error.hpp"
#include "rare_reach/oracle.hpp"
#include "rare_reach/stats.hpp"
#include "support.hpp"

using namespace rare_reach;
using testkit::binomialSe;
using testkit::relClose;
using testkit::withinSigma;

namespace {

SimConfig config() {
  SimConfig cfg;
  cfg.masterSeed = testkit::kSeed;
  cfg.workers = 1;
  return cfg;
}

std::vector<double> draws(const RestartMeasure& m, std::size_t n, const char* label) {
  Stream stream(testkit::kSeed, experimentId(label), 0);
  std::vector<double> v(n);
  for (auto& y : v) y = sampleRestart(m, stream);
  return v;
}

// Closed-form density extended to the endpoints, for quadrature.
double density(const RestartMeasure& m, double y) {
  if (const auto* te = std::get_if<TruncatedExponential>(&m))
    return te->rate * std::exp(-te->rate * y) / (1.0 - std::exp(-te->rate * te->upper));
  const auto& q = std::get<BrownianQsd>(m);
  return oracle::brownianQsdDensity(q.mu, q.upper, y);
}

// P(hit 3 by time t) for the +-1 walk restarted at 1 on every visit to 0.
double restartedWalkCdf(double p, int t) {
  double at1 = 1.0, at2 = 0.0, done = 0.0;
  for (int s = 0; s < t; ++s) {
    const double n1 = (1 - p) * at1 + (1 - p) * at2;
    const double n2 = p * at1;
    done += p * at2;
    at1 = n1;
    at2 = n2;
  }
  return done;
}

}  // namespace

TEST(Measure, Validation) {
  EXPECT_THROW(validate(RestartMeasure{TruncatedExponential{0.0, 1.0}}), InvalidArgument);
  EXPECT_THROW(validate(RestartMeasure{BrownianQsd{0.2, -1.0}}), InvalidArgument);
  EXPECT_THROW(validate(RestartMeasure{Empirical{{}, 3.0}}), InvalidArgument);
  EXPECT_THROW(validate(RestartMeasure{Empirical{{3.0}, 3.0}}), InvalidArgument);
  EXPECT_THROW(restartDensity(RestartMeasure{Empirical{{1.0}, 3.0}}, 1.0), InvalidArgument);
  EXPECT_EQ(upperOf(RestartMeasure{BrownianQsd{0.2, 7.0}}), 7.0);
}

TEST(Measure, TruncatedExponentialSamplesFollowCdf) {
  const TruncatedExponential te{0.3, 5.0};
  const auto v = draws(te, 20000, "te-law");
  const double mass = -std::expm1(-0.3 * 5.0);
  const auto ks = stats::ksTest(v, [&](double y) { return -std::expm1(-0.3 * y) / mass; });
  EXPECT_GT(ks.pValue, 0.01);
  const double mean = oracle::quadrature(
      [&](double y) { return y * density(te, y); }, 0.0, 5.0, 1e-12);
  const auto s = stats::summarize(v);
  EXPECT_TRUE(withinSigma(s.mean, mean, s.stdError()));
}

TEST(Measure, BrownianQsdSamplesFollowCdf) {
  const BrownianQsd q{0.2, 10.0};
  const auto v = draws(q, 20000, "qsd-law");
  for (double y : v) ASSERT_TRUE(y > 0.0 && y < 10.0);
  const auto ks = stats::ksTest(v, [](double y) { return oracle::brownianQsdCdf(0.2, 10.0, y); });
  EXPECT_GT(ks.pValue, 0.01);
}

TEST(Measure, DensitiesIntegrateToOne) {
  for (const RestartMeasure m : {RestartMeasure{TruncatedExponential{0.1, 50.0}},
                                 RestartMeasure{BrownianQsd{0.2, 10.0}},
                                 RestartMeasure{BrownianQsd{1.5, 3.0}}}) {
    const double x = upperOf(m);
    EXPECT_NEAR(oracle::quadrature([&](double y) { return density(m, y); }, 0.0, x, 1e-12),
                1.0, 1e-8);
  }
}

TEST(ExpMoment, MatchesQuadrature) {
  const std::vector<std::pair<RestartMeasure, double>> cases{
      {TruncatedExponential{0.1, 50.0}, 2.0}, {TruncatedExponential{0.5, 4.0}, 0.5},
      {TruncatedExponential{1.0, 4.0}, -0.3}, {BrownianQsd{0.2, 10.0}, 0.4},
      {BrownianQsd{0.2, 10.0}, 0.2},          {BrownianQsd{0.7, 6.0}, 1.1}};
  for (const auto& [m, lambda] : cases) {
    const double x = upperOf(m);
    // Integrate against e^{lambda (y - x)} so the integrand stays O(1).
    const double scaled = oracle::quadrature(
        [&](double y) { return std::exp(lambda * (y - x)) * density(m, y); }, 0.0, x,
        1e-14);
    EXPECT_TRUE(relClose(expMoment(m, lambda), scaled * std::exp(lambda * x), 1e-8))
        << "lambda = " << lambda;
  }
}

TEST(Measure, DensityVanishesOutside) {
  const TruncatedExponential te{0.5, 4.0};
  EXPECT_EQ(restartDensity(te, 0.0), 0.0);
  EXPECT_EQ(restartDensity(te, 4.5), 0.0);
  EXPECT_DOUBLE_EQ(restartDensity(te, 1.0), density(te, 1.0));
}

TEST(ExpMoment, NearRateLimitIsContinuous) {
  const TruncatedExponential te{0.5, 4.0};
  EXPECT_TRUE(relClose(expMoment(te, 0.5), expMoment(te, 0.5 + 1e-7), 1e-6));
}

TEST(ExpMoment, EmpiricalIsSampleMean) {
  const Empirical e{{1.0, 2.0}, 3.0};
  EXPECT_DOUBLE_EQ(expMoment(e, 0.5), (std::exp(0.5) + std::exp(1.0)) / 2);
}

TEST(ExpMoment, BrownianQsdAtTwiceTheDrift) {
  for (double mu : {0.2, 0.5, 1.0})
    for (double x : {3.0, 10.0})
      EXPECT_TRUE(relClose(expMoment(BrownianQsd{mu, x}, 2 * mu), std::exp(mu * x), 1e-12));
}

TEST(ExpMoment, TruncatedExponentialScale) {
  const double m = expMoment(TruncatedExponential{0.1, 50.0}, 2.0);
  EXPECT_TRUE(relClose(m, 9.6e39, 0.01));
  EXPECT_TRUE(relClose(m * std::exp(-100.0), 3.6e-4, 0.02));
}

TEST(EstimateQ, WalkFromFixedPointIsGamblersRuin) {
  const auto q = estimateQ(TwoPoint{0.45}, Empirical{{1.0}, 3.0}, 20000, config(),
                           experimentId("q-walk"));
  const double truth = oracle::exactWalkExit(0.45, 1, 3).qUpper;
  EXPECT_NEAR(truth, 0.26910299, 1e-8);
  EXPECT_EQ(q.discarded, 0u);
  EXPECT_TRUE(withinSigma(q.estimate(), truth, binomialSe(truth, 20000)));
}

TEST(EstimateQ, BrownianFromQsdMatchesOptionalStopping) {
  const auto q = estimateQ(LevyModel::brownian(0.2), BrownianQsd{0.2, 6.0}, 4000, config(),
                           experimentId("q-bm"));
  const double truth = oracle::brownianQsdUpper(0.2, 6.0);
  EXPECT_TRUE(withinSigma(q.estimate(), truth, binomialSe(truth, 4000)));
}

TEST(BetaRate, ClosedFormForSelfQsd) {
  const auto b = betaRate(LevyModel::brownian(0.2), BrownianQsd{0.2, 10.0}, 10, config(), 1);
  EXPECT_TRUE(b.exact);
  EXPECT_NEAR(b.rate, 0.069348022, 1e-8);
}

TEST(BetaRate, SimulatedMeanMatchesExitTime) {
  const auto b = betaRate(TwoPoint{0.45}, Empirical{{1.0}, 3.0}, 20000, config(),
                          experimentId("beta-walk"));
  EXPECT_FALSE(b.exact);
  const double mean = oracle::exactWalkExit(0.45, 1, 3).meanTime;
  EXPECT_TRUE(relClose(1.0 / b.rate, mean, 0.03));
  // Walk exit times are discrete, far from exponential.
  EXPECT_LT(b.ksPValue, 1e-6);
}

TEST(Cycles, SelfQsdCyclesAreExponential) {
  const auto batch = simulateCycles(LevyModel::brownian(0.2), BrownianQsd{0.2, 6.0}, 2000,
                                    config(), experimentId("cycles-bm"));
  ASSERT_EQ(batch.discarded, 0u);
  std::vector<double> times;
  for (const auto& c : batch.cycles) times.push_back(c.exit.time);
  const double beta = oracle::brownianQsdRate(0.2, 6.0);
  const auto ks = stats::ksTest(times, [beta](double t) { return -std::expm1(-beta * t); });
  EXPECT_GT(ks.pValue, 0.01);
}

TEST(RestartedRuns, WalkMatchesMarkovChain) {
  const std::size_t reps = 20000;
  const auto runs = simulateRestartedRuns(TwoPoint{0.45}, Empirical{{1.0}, 3.0}, 20.0, reps,
                                          config(), experimentId("runs-walk"));
  std::size_t hits = 0;
  for (const auto& r : runs) {
    if (r.success) {
      ++hits;
      EXPECT_LE(r.totalTime, 20.0);
      EXPECT_GE(r.successCycle, 2.0);
    } else {
      EXPECT_EQ(r.totalTime, 20.0);
      EXPECT_EQ(r.successCycle, 0.0);
    }
  }
  const double truth = restartedWalkCdf(0.45, 20);
  EXPECT_TRUE(withinSigma(static_cast<double>(hits) / reps, truth, binomialSe(truth, reps)));
}

TEST(RestartedRuns, Reproducible) {
  const auto a = simulateRestartedRuns(LevyModel::exponentialJumpsExample(),
                                       TruncatedExponential{0.1, 5.0}, 30.0, 50, config(), 9);
  const auto b = simulateRestartedRuns(LevyModel::exponentialJumpsExample(),
                                       TruncatedExponential{0.1, 5.0}, 30.0, 50, config(), 9);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].success, b[i].success);
    EXPECT_EQ(a[i].totalTime, b[i].totalTime);
    EXPECT_EQ(a[i].cycleCount, b[i].cycleCount);
  }
}

TEST(DirectPassage, ExactBranches) {
  const auto walk = directPassageProbability(TwoPoint{0.45}, 10.0, 200.0, 1, config(), 1);
  EXPECT_TRUE(walk.exact);
  EXPECT_DOUBLE_EQ(walk.estimate, oracle::exactWalkPassage(0.45, 10, 200).at(200));
  const auto bm = directPassageProbability(LevyModel::brownian(0.2), 6.0, 20.0, 1, config(), 1);
  EXPECT_TRUE(bm.exact);
  EXPECT_DOUBLE_EQ(bm.estimate, oracle::brownianPassageCdf(0.2, 1.0, 6.0, 20.0));
}

TEST(GainReport, BrownianMatchesAnalyticPrediction) {
  const auto rep = restartGainReport(LevyModel::brownian(0.2), BrownianQsd{0.2, 6.0}, 20.0, 2000,
                                     config(), experimentId("gain"));
  ASSERT_TRUE(std::isfinite(rep.analyticPrediction));
  const double scale = rep.directProbability * rep.budget * rep.expMoment;
  const double truth = rep.analyticPrediction * scale;
  EXPECT_TRUE(withinSigma(rep.restartSuccess, truth, binomialSe(truth, 2000)));
  EXPECT_TRUE(withinSigma(rep.gain, rep.analyticPrediction, rep.ciHalfWidth / stats::kZ95));
  EXPECT_NEAR(rep.expMoment, std::exp(1.2), 1e-9);
  EXPECT_NEAR(rep.betaHat, oracle::brownianQsdRate(0.2, 6.0), 1e-12);
}

TEST(GainReport, NoClosedFormForOtherMeasures) {
  const auto rep = restartGainReport(TwoPoint{0.45}, TruncatedExponential{0.1, 4.0}, 40.0, 500,
                                     config(), experimentId("gain-walk"));
  EXPECT_TRUE(std::isnan(rep.analyticPrediction));
  EXPECT_GT(rep.restartSuccess, 0.0);
  EXPECT_GT(rep.gain, 0.0);
}
