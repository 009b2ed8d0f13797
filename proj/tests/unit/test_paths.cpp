#include "rare_reach/paths.hpp"

#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "rare_reach/error.hpp"
#include "rare_reach/oracle.hpp"
#include "rare_reach/stats.hpp"
#include "support.hpp"

using namespace rare_reach;
using testkit::binomialSe;
using testkit::withinSigma;

namespace {

double hitFraction(const Model& model, double x, double budget, std::size_t reps,
                   const SimConfig& cfg, const char* label) {
  const StreamFamily fam(testkit::kSeed, experimentId(label));
  std::size_t hits = 0;
  for (std::size_t r = 0; r < reps; ++r) {
    auto s = fam(r);
    hits += simulatePassage(model, x, budget, cfg, s).hit ? 1 : 0;
  }
  return static_cast<double>(hits) / static_cast<double>(reps);
}

stats::Summary tiltedWeights(const Model& model, double lambda, double x, double budget,
                             std::size_t reps, const SimConfig& cfg, const char* label) {
  const StreamFamily fam(testkit::kSeed, experimentId(label));
  std::vector<double> w(reps, 0.0);
  for (std::size_t r = 0; r < reps; ++r) {
    auto s = fam(r);
    const auto o = simulateTiltedPassage(model, lambda, x, budget, cfg, s);
    if (o.hit) w[r] = std::exp(o.logWeight);
  }
  return stats::summarize(w);
}

}  // namespace

TEST(WalkPassage, SingleStep) {
  const double f = hitFraction(TwoPoint{0.45}, 1.0, 1.0, 100000, {}, "single-step");
  EXPECT_TRUE(withinSigma(f, 0.45, binomialSe(0.45, 100000)));
}

TEST(WalkPassage, AgreesWithDp) {
  const double truth = oracle::exactWalkPassage(0.45, 10, 200).at(200);
  const double f = hitFraction(TwoPoint{0.45}, 10.0, 200.0, 100000, {}, "walk-dp");
  EXPECT_TRUE(withinSigma(f, truth, binomialSe(truth, 100000)));
}

TEST(WalkPassage, TiltedAgreesWithDp) {
  const CumulantProfile prof(TwoPoint{0.45});
  for (double lambda : {prof.lambdaStar(), 0.5 * prof.lambdaStar(), 1.5 * prof.lambdaStar()}) {
    const auto s = tiltedWeights(TwoPoint{0.45}, lambda, 15.0, 300.0, 20000, {}, "walk-tilt");
    const double truth = oracle::exactWalkPassage(0.45, 15, 300).at(300);
    EXPECT_TRUE(withinSigma(s.mean, truth, s.stdError())) << "lambda = " << lambda;
  }
}

TEST(WalkPassage, LatticeHitsHaveNoOvershootAndWeightIsConstantAtLambdaStar) {
  const CumulantProfile prof(TwoPoint{0.45});
  const StreamFamily fam(testkit::kSeed, experimentId("walk-weight"));
  for (std::uint64_t r = 0; r < 200; ++r) {
    auto s = fam(r);
    const auto o = simulateTiltedPassage(TwoPoint{0.45}, prof.lambdaStar(), 20.0, 1e5, {}, s);
    ASSERT_TRUE(o.hit);
    EXPECT_EQ(o.overshoot, 0.0);
    EXPECT_NEAR(o.logWeight, -prof.lambdaStar() * 20.0, 1e-10);
  }
}

TEST(WalkPassage, ZeroBudget) {
  Stream s(1, 2, 3);
  const auto o = simulatePassage(TwoPoint{0.45}, 1.0, 0.0, {}, s);
  EXPECT_FALSE(o.hit);
  EXPECT_EQ(o.time, 0.0);
  EXPECT_EQ(o.events, 0u);
  const auto l = simulatePassage(LevyModel::brownian(0.2), 1.0, 0.0, {}, s);
  EXPECT_FALSE(l.hit);
}

TEST(WalkPassage, NormalStepsRespectCramerBound) {
  // P(tau(x) < inf) <= exp(-lambdaStar x); the overshoot makes it strict.
  const NormalSteps law{-0.2, 1.0};
  const double bound = std::exp(-0.4 * 6.0);
  const auto s = tiltedWeights(law, 0.4, 6.0, 2000.0, 20000, {}, "normal-bound");
  EXPECT_LT(s.mean, bound);
  EXPECT_GT(s.mean, 0.3 * bound);
  const double plain = hitFraction(law, 6.0, 2000.0, 40000, {}, "normal-plain");
  EXPECT_TRUE(withinSigma(plain, s.mean, std::hypot(binomialSe(s.mean, 40000), s.stdError())));
}

TEST(BrownianPassage, BridgeMakesCoarseStepsExact) {
  const double mu = 0.2, x = 3.0, budget = 10.0;
  const double truth = oracle::brownianPassageCdf(mu, 1.0, x, budget);
  for (double dt : {0.01, 0.5, 2.5}) {
    SimConfig cfg;
    cfg.dt = dt;
    const double f = hitFraction(LevyModel::brownian(mu), x, budget, 20000, cfg, "bm-bridge");
    EXPECT_TRUE(withinSigma(f, truth, binomialSe(truth, 20000))) << "dt = " << dt;
  }
  SimConfig coarse;
  coarse.dt = 0.5;
  coarse.bridgeCorrection = false;
  const double biased = hitFraction(LevyModel::brownian(mu), x, budget, 20000, coarse, "bm-bridge");
  EXPECT_LT(biased, truth - 3 * binomialSe(truth, 20000));
}

TEST(BrownianPassage, LongBudgetApproachesExpMinus2MuX) {
  SimConfig cfg;
  cfg.dt = 10.0;
  const double truth = oracle::brownianPassageCdf(0.2, 1.0, 10.0, 1e4);
  EXPECT_NEAR(truth, std::exp(-4.0), 1e-12);
  const double f = hitFraction(LevyModel::brownian(0.2), 10.0, 1e4, 40000, cfg, "bm-long");
  EXPECT_TRUE(withinSigma(f, truth, binomialSe(truth, 40000)));
}

TEST(LevyPassage, SpectrallyNegativeTiltIsExact) {
  // No upward jumps: paths creep over the barrier, so every tilted hit has
  // weight exactly exp(-lambdaStar x).
  const LevyModel m{1.0, 1.0, 0.0, 1.0, 3.0, 1.0};
  const CumulantProfile prof(m);
  const StreamFamily fam(testkit::kSeed, experimentId("levy-creep"));
  for (std::uint64_t r = 0; r < 100; ++r) {
    auto s = fam(r);
    const auto o = simulateTiltedPassage(m, prof.lambdaStar(), 5.0, 1e4, {}, s);
    ASSERT_TRUE(o.hit);
    EXPECT_EQ(o.overshoot, 0.0);
    EXPECT_NEAR(o.logWeight, -prof.lambdaStar() * 5.0, 1e-9);
  }
}

TEST(LevyPassage, TiltedAndPlainAgree) {
  const LevyModel m = LevyModel::exponentialJumpsExample();
  SimConfig cfg;
  cfg.dt = 0.01;
  const auto tilted = tiltedWeights(m, 2.0, 1.5, 10.0, 20000, cfg, "levy-tilt");
  const double plain = hitFraction(m, 1.5, 10.0, 20000, cfg, "levy-plain");
  EXPECT_TRUE(withinSigma(plain, tilted.mean,
                          std::hypot(binomialSe(tilted.mean, 20000), tilted.stdError())));
  EXPECT_LT(tilted.mean, std::exp(-2.0 * 1.5));
}

TEST(LevyPassage, JumpOvershootIsPositive) {
  const LevyModel m = LevyModel::exponentialJumpsExample();
  const StreamFamily fam(testkit::kSeed, experimentId("levy-overshoot"));
  int jumpHits = 0;
  for (std::uint64_t r = 0; r < 300; ++r) {
    auto s = fam(r);
    const auto o = simulateTiltedPassage(m, 2.0, 5.0, 1e3, {}, s);
    ASSERT_TRUE(o.hit);
    ASSERT_GE(o.overshoot, 0.0);
    EXPECT_LE(o.logWeight, -2.0 * 5.0 + 1e-12);
    jumpHits += o.overshoot > 0.0 ? 1 : 0;
  }
  EXPECT_GT(jumpHits, 0);
}

TEST(LevyPassage, EventCap) {
  SimConfig cfg;
  cfg.maxEvents = 10;
  Stream s(1, 1, 1);
  EXPECT_THROW(simulatePassage(LevyModel::brownian(0.2), 5.0, 100.0, cfg, s), EventCapExceeded);
  EXPECT_THROW(simulatePassage(TwoPoint{0.4}, 5.0, 100.0, cfg, s), EventCapExceeded);
}

TEST(Exit, GamblersRuinProbabilityAndMeanTime) {
  const auto truth = oracle::exactWalkExit(0.45, 1, 3);
  const StreamFamily fam(testkit::kSeed, experimentId("ruin"));
  std::size_t up = 0;
  std::vector<double> times;
  const std::size_t reps = 100000;
  for (std::size_t r = 0; r < reps; ++r) {
    auto s = fam(r);
    const auto e = simulateExit(TwoPoint{0.45}, 1.0, 3.0, {}, s);
    up += e.side == ExitSide::Upper ? 1 : 0;
    times.push_back(e.time);
  }
  EXPECT_TRUE(withinSigma(up / double(reps), truth.qUpper, binomialSe(truth.qUpper, reps)));
  const auto t = stats::summarize(times);
  EXPECT_TRUE(withinSigma(t.mean, truth.meanTime, t.stdError()));
}

TEST(Exit, BrownianOptionalStopping) {
  const double truth = oracle::brownianExitUpper(0.2, 1.0, 5.0, 10.0);
  const StreamFamily fam(testkit::kSeed, experimentId("bm-exit"));
  std::size_t up = 0;
  const std::size_t reps = 10000;
  for (std::size_t r = 0; r < reps; ++r) {
    auto s = fam(r);
    const auto e = simulateExit(LevyModel::brownian(0.2), 5.0, 10.0, {}, s);
    up += e.side == ExitSide::Upper ? 1 : 0;
    if (e.side == ExitSide::Upper)
      ASSERT_EQ(e.terminalPosition, 10.0);
    else
      ASSERT_EQ(e.terminalPosition, 0.0);
  }
  EXPECT_TRUE(withinSigma(up / double(reps), truth, binomialSe(truth, reps)));
}

TEST(Exit, UpperProbabilityIncreasesTowardsTheTop) {
  SimConfig cfg;
  cfg.dt = 0.05;
  double last = 0.0;
  for (double y0 : {5.0, 8.0, 9.5, 9.95}) {
    const StreamFamily fam(testkit::kSeed, experimentId("bm-exit-near"));
    std::size_t up = 0;
    for (std::size_t r = 0; r < 4000; ++r) {
      auto s = fam(r);
      up += simulateExit(LevyModel::brownian(0.2), y0, 10.0, cfg, s).side == ExitSide::Upper;
    }
    const double f = up / 4000.0;
    EXPECT_GT(f, last) << "y0 = " << y0;
    last = f;
  }
  EXPECT_GT(last, 0.9);
}

TEST(Exit, JumpExitsLeaveTheInterval) {
  const StreamFamily fam(testkit::kSeed, experimentId("levy-exit"));
  for (std::uint64_t r = 0; r < 2000; ++r) {
    auto s = fam(r);
    const auto e = simulateExit(LevyModel::exponentialJumpsExample(), 2.0, 4.0, {}, s);
    if (e.side == ExitSide::Upper)
      ASSERT_GE(e.terminalPosition, 4.0);
    else
      ASSERT_LE(e.terminalPosition, 0.0);
  }
}

TEST(Exit, BudgetCap) {
  Stream s(1, 1, 1);
  EXPECT_THROW(simulateExit(TwoPoint{0.45}, 500.0, 1000.0, {}, s, 10), BudgetCapExceeded);
  EXPECT_THROW(simulateExit(LevyModel::brownian(0.2), 500.0, 1000.0, {}, s, 10),
               BudgetCapExceeded);
  EXPECT_THROW(simulateExit(TwoPoint{0.45}, 0.0, 3.0, {}, s), InvalidArgument);
}

TEST(Reproducibility, SameStreamSameOutcome) {
  for (const Model& m : {Model(TwoPoint{0.45}), Model(LevyModel::exponentialJumpsExample())}) {
    Stream a(9, 9, 9), b(9, 9, 9);
    const auto oa = simulateTiltedPassage(m, 0.5, 3.0, 50.0, {}, a);
    const auto ob = simulateTiltedPassage(m, 0.5, 3.0, 50.0, {}, b);
    EXPECT_EQ(oa.hit, ob.hit);
    EXPECT_EQ(oa.time, ob.time);
    EXPECT_EQ(oa.logWeight, ob.logWeight);
  }
}

TEST(PassageWeight, Definition) {
  PassageOutcome o;
  o.terminalPosition = 3.0;
  o.time = 7.0;
  EXPECT_EQ(passageWeight(o, 0.0, 0.0), 1.0);
  EXPECT_NEAR(passageWeight(o, 0.5, -0.1), std::exp(-1.5 - 0.7), 1e-15);
}
