#include "rare_reach/parallel.hpp"

#include <cmath>

#include <gtest/gtest.h>

#include "rare_reach/error.hpp"
#include "rare_reach/oracle.hpp"
#include "rare_reach/stats.hpp"
#include "support.hpp"

using namespace rare_reach;
using testkit::withinSigma;

namespace {

SimConfig config(unsigned workers = 1) {
  SimConfig cfg;
  cfg.masterSeed = testkit::kSeed;
  cfg.workers = workers;
  return cfg;
}

}  // namespace

TEST(MinPassage, ClosedForm) {
  EXPECT_EQ(minPassageProbability(0.0, 7), 0.0);
  EXPECT_EQ(minPassageProbability(1.0, 7), 1.0);
  EXPECT_NEAR(minPassageProbability(0.1, 3), 1 - 0.9 * 0.9 * 0.9, 1e-15);
  EXPECT_NEAR(minPassageProbability(1e-300, 40) / 1e-300, 40.0, 1e-12);
  EXPECT_THROW(minPassageProbability(-0.1, 2), InvalidArgument);
  EXPECT_THROW(minPassageProbability(0.5, 0), InvalidArgument);
}

TEST(PassageEstimate, TiltedAndPlainMatchDp) {
  const double truth = oracle::exactWalkPassage(0.45, 20, 600).at(600);
  for (bool tilted : {true, false}) {
    const auto est = estimatePassageProbability(TwoPoint{0.45}, 20.0, 600.0, 20000, tilted,
                                                config(), experimentId("estimate"));
    EXPECT_TRUE(withinSigma(est.estimate(), truth, est.stdError())) << "tilted = " << tilted;
  }
}

TEST(PassageEstimate, ScaleKeepsTinyProbabilitiesRepresentable) {
  const auto est = estimatePassageProbability(TwoPoint{0.45}, 5000.0, 1e6, 20, true, config(),
                                              experimentId("tiny"));
  EXPECT_EQ(est.hits, 20u);
  EXPECT_EQ(est.estimate(), 0.0);  // underflows as a double
  EXPECT_NEAR(est.scaledMean, 1.0, 1e-9);
  EXPECT_NEAR(est.logScale, -5000.0 * std::log(0.55 / 0.45), 1e-9);
  EXPECT_LT(est.relativeError(), 1e-9);
}

TEST(Ratio, SingleParticleIsOne) {
  ParallelSpec spec;
  spec.reps = 100;
  const auto cell = estimateRatio(spec, 20.0, 1, config());
  EXPECT_EQ(cell.ratio, 1.0);
  EXPECT_EQ(cell.ciHalfWidth, 0.0);
  EXPECT_TRUE(cell.flag.empty());
}

TEST(Ratio, MatchesDpOracle) {
  ParallelSpec spec;
  spec.reps = 4000;
  const double x = 20.0, budget = 300.0 * x;
  const double denom = oracle::exactWalkPassage(0.45, 20, static_cast<int>(budget)).at(6000);
  for (int n : {5, 20, 40}) {
    const int split = static_cast<int>(budget / n);
    const double numer =
        minPassageProbability(oracle::exactWalkPassage(0.45, 20, split).at(split), n);
    const auto cell = estimateRatio(spec, x, n, config());
    EXPECT_TRUE(withinSigma(cell.ratio, numer / denom, cell.ciHalfWidth / stats::kZ95))
        << "N = " << n;
  }
}

TEST(Ratio, DegenerateAndInsufficientCellsAreFlagged) {
  ParallelSpec spec;
  spec.budgetSlope = 1.0;
  spec.reps = 50;
  const auto degenerate = estimateRatio(spec, 2.0, 5, config());
  EXPECT_EQ(degenerate.flag, "degenerate-budget");
  EXPECT_EQ(degenerate.ratio, 0.0);

  ParallelSpec plain;
  plain.tiltAtLambdaStar = false;
  plain.reps = 10;
  const auto starved = estimateRatio(plain, 200.0, 5, config());
  EXPECT_EQ(starved.flag, "insufficient-signal");
  EXPECT_TRUE(std::isnan(starved.ratio));
}

TEST(Ratio, WorkerCountDoesNotChangeResults) {
  ParallelSpec spec;
  spec.model = LevyModel::exponentialJumpsExample();
  spec.budgetSlope = 15.0;
  spec.reps = 300;
  const auto one = estimateRatio(spec, 4.0, 10, config(1));
  const auto four = estimateRatio(spec, 4.0, 10, config(4));
  EXPECT_EQ(one.ratio, four.ratio);
  EXPECT_EQ(one.ciHalfWidth, four.ciHalfWidth);
  EXPECT_EQ(one.pSingle, four.pSingle);
}

TEST(Sweep, TableLayoutAndThreshold) {
  ParallelSpec spec;
  spec.barriers = {10.0, 20.0};
  spec.particleGrid = {1, 10, 29, 30, 31};
  spec.reps = 200;
  const auto t = sweepPhaseTransition(spec, config());
  EXPECT_EQ(t.columns(), (std::vector<std::string>{"x", "N", "ratio", "ci", "pSingle", "pMin",
                                                   "thresholdN", "nStar", "flag"}));
  ASSERT_EQ(t.size(), 10u);
  for (std::size_t r = 0; r < t.size(); ++r) {
    EXPECT_NEAR(t.number(r, "thresholdN"), 30.0, 1e-9);
    EXPECT_EQ(t.number(r, "nStar"), 29.0);
  }
  EXPECT_EQ(t.number(0, "ratio"), 1.0);
}

TEST(Sweep, OracleRatiosRiseThenCollapse) {
  // Exact ratios at x = 150, C = 300: the split budget 45000 / N stays above the
  // typical tilted hitting time x / 0.1 = 1500 only while N < 30.
  const int x = 150;
  const int budget = 300 * x;
  const double denom = oracle::exactWalkPassage(0.45, x, budget).at(budget);
  auto ratio = [&](int n) {
    const int split = budget / n;
    return minPassageProbability(oracle::exactWalkPassage(0.45, x, split).at(split), n) / denom;
  };
  EXPECT_GT(ratio(5), 0.75 * 5);
  EXPECT_GT(ratio(15), ratio(5));
  EXPECT_LT(ratio(80), 0.1);
}
