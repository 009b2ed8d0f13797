#include "rare_reach/queueing.hpp"

#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "rare_reach/error.hpp"
#include "rare_reach/stats.hpp"
#include "support.hpp"

using namespace rare_reach;
using testkit::relClose;

namespace {

// Balance equations solved in long double: pi(k) proportional to rho^k.
long double balancePi(long double lambda, long double mu, int capacity, int k) {
  long double norm = 0.0L, term = 1.0L, target = 0.0L;
  for (int i = 0; i <= capacity; ++i) {
    if (i == k) target = term;
    norm += term;
    term *= lambda / mu;
  }
  return target / norm;
}

}  // namespace

TEST(Queue, Validation) {
  QueueConfig cfg;
  cfg.arrivalRate = 1.0;
  EXPECT_THROW(validate(cfg), InvalidArgument);
  cfg = QueueConfig{};
  cfg.absorbThreshold = 40;
  EXPECT_THROW(validate(cfg), InvalidArgument);
  cfg = QueueConfig{};
  cfg.rewardBase = 1.0;
  EXPECT_THROW(validate(cfg), InvalidArgument);
  EXPECT_NO_THROW(validate(QueueConfig{}));
  EXPECT_THROW(stationaryPi(QueueConfig{}, 41), InvalidArgument);
}

TEST(Queue, StationaryPiMatchesBalanceEquations) {
  const QueueConfig cfg;
  double total = 0.0;
  for (int k = 0; k <= cfg.capacity; ++k) {
    total += stationaryPi(cfg, k);
    EXPECT_TRUE(relClose(stationaryPi(cfg, k),
                         static_cast<double>(balancePi(0.7L, 1.0L, 40, k)), 1e-13));
  }
  EXPECT_NEAR(total, 1.0, 1e-14);
  EXPECT_NEAR(stationaryPi(cfg, 40), 1.9100425795e-7, 1e-17);
}

TEST(Queue, BlockingReward) {
  QueueConfig cfg;
  cfg.rewardB = 1.5;
  cfg.rewardBase = 2.0;
  cfg.xRef = 1;
  EXPECT_DOUBLE_EQ(blockingReward(cfg, 4), 1.5 * (1 + 8));
  EXPECT_DOUBLE_EQ(blockingReward(cfg, 1), 3.0);
}

TEST(Queue, OccupationMatchesStationaryLaw) {
  QueueConfig cfg;
  cfg.capacity = 8;
  cfg.absorbThreshold = 2;
  Stream s(testkit::kSeed, experimentId("occupation"), 0);
  const auto run = simulateQueue(cfg, 0, 2e5, s);
  EXPECT_NEAR(run.time, 2e5, 1e-6);
  ASSERT_EQ(run.occupation.size(), 9u);
  std::vector<double> empirical, exact;
  for (int k = 0; k <= 8; ++k) {
    empirical.push_back(run.occupation[k] / run.time);
    exact.push_back(stationaryPi(cfg, k));
  }
  EXPECT_LT(stats::totalVariation(empirical, exact), 0.01);
  EXPECT_EQ(run.firstHit[0], 0.0);
  for (int k = 1; k <= 8; ++k) EXPECT_GT(run.firstHit[k], run.firstHit[k - 1]);
}

TEST(Queue, ExactReport) {
  const auto r = exactReport(QueueConfig{}, 40);
  EXPECT_EQ(r.method, "exact");
  EXPECT_EQ(r.estimate, stationaryPi(QueueConfig{}, 40));
  EXPECT_EQ(r.ci, 0.0);
}

TEST(Naive, EstimatesModerateStates) {
  QueueConfig cfg;
  const auto r = naivePiHat(cfg, 3, 5000.0, 40, testkit::kSeed, 1);
  EXPECT_EQ(r.method, "naiveMC");
  EXPECT_TRUE(testkit::withinSigma(r.estimate, stationaryPi(cfg, 3), r.ci / stats::kZ95));
}

TEST(Naive, EventBudgetIsRespected) {
  const auto r = naivePiHatWithEvents(QueueConfig{}, 40, 1e4, 200'000, testkit::kSeed);
  EXPECT_GE(r.eventsUsed, 200'000u);
  EXPECT_LT(r.eventsUsed, 260'000u);
  EXPECT_EQ(r.estimate, 0.0);
  EXPECT_EQ(r.hits, 0u);
}

TEST(Renewal, NearbyStateMatchesExact) {
  const QueueConfig cfg;
  RenewalOptions opt;
  opt.totalEvents = 2'000'000;
  opt.parallel = 100;
  opt.workers = 1;
  const auto r = renewalEstimator(cfg, 13, opt, testkit::kSeed);
  EXPECT_EQ(r.method, "renewal");
  EXPECT_TRUE(testkit::withinSigma(r.estimate, stationaryPi(cfg, 13), r.ci / stats::kZ95));
  EXPECT_LE(r.eventsUsed, opt.totalEvents + opt.totalEvents / 10);
  EXPECT_EQ(r.particles, 100u);
}

TEST(Renewal, RejectsBadArguments) {
  RenewalOptions opt;
  EXPECT_THROW(renewalEstimator(QueueConfig{}, 12, opt, 1), InvalidArgument);
  opt.returnShare = 1.0;
  EXPECT_THROW(renewalEstimator(QueueConfig{}, 20, opt, 1), InvalidArgument);
}

TEST(Renewal, ParticleCountFollowsJumpChain) {
  // Jump chain up-probability 0.7 / 1.7; more budget never means fewer replicas.
  const QueueConfig cfg;
  const int small = queueParticleCount(cfg, 40, 100'000);
  const int large = queueParticleCount(cfg, 40, 10'000'000);
  EXPECT_GE(small, 1);
  EXPECT_GE(large, small);
  EXPECT_THROW(queueParticleCount(cfg, 12, 1000), InvalidArgument);
}

TEST(Fv, NearbyStateMatchesExact) {
  const QueueConfig cfg;
  FvQueueOptions opt;
  opt.particles = 500;
  opt.totalEvents = 2'000'000;
  const auto r = fvEstimator(cfg, 14, opt, testkit::kSeed);
  EXPECT_EQ(r.method, "fv");
  EXPECT_TRUE(relClose(r.estimate, stationaryPi(cfg, 14), 0.15));
}

TEST(VarianceLink, RatioIsFiniteWhereHitsOccur) {
  QueueConfig cfg;
  const auto v = varianceLinkCheck(cfg, 6, 200.0, 5.0, 500, testkit::kSeed, 1);
  EXPECT_GT(v.pHit, 0.0);
  EXPECT_LE(v.pHit, 1.0);
  EXPECT_GE(v.varPi, 0.0);
  EXPECT_NEAR(v.ratio, std::abs(v.varPi - v.varXi) / v.pHit, 1e-15);
  EXPECT_THROW(varianceLinkCheck(cfg, 40, 1.0, 5.0, 10, testkit::kSeed, 1), InsufficientSignal);
}

TEST(VarianceLink, ConstantFittedAtTenHoldsAtFifteen) {
  // c near the occupation fraction a hit produces at these horizons.
  const QueueConfig cfg;
  for (double c : {0.0, 0.01}) {
    const auto at10 = varianceLinkCheck(cfg, 10, 300.0, c, 4000, testkit::kSeed, 1);
    const auto at15 = varianceLinkCheck(cfg, 15, 450.0, c, 4000, testkit::kSeed, 1);
    EXPECT_LE(at15.ratio, at10.ratio) << "c=" << c;
    if (c == 0.0) EXPECT_EQ(at10.varXi, 0.0);
  }
}

TEST(Estimators, RenewalBeatsNaiveAtOneMillionEvents) {
  const QueueConfig cfg;
  int renewalNonzero = 0, naiveNonzero = 0;
  for (std::uint64_t s = 0; s < 20; ++s) {
    RenewalOptions opt;
    opt.totalEvents = 1'000'000;
    opt.workers = 1;
    renewalNonzero += renewalEstimator(cfg, 40, opt, testkit::kSeed + s).estimate > 0.0;
    naiveNonzero +=
        naivePiHatWithEvents(cfg, 40, 40.0, 1'000'000, testkit::kSeed + s).estimate > 0.0;
  }
  EXPECT_GT(renewalNonzero, naiveNonzero);
  EXPECT_LE(naiveNonzero, 2);
}

TEST(Gradient, Assembly) {
  EXPECT_DOUBLE_EQ(gradientAssembly(0.0, 5.0, 1.0), 0.0);
  EXPECT_DOUBLE_EQ(gradientAssembly(0.3, 2.0, 2.0), 0.0);
  EXPECT_NEAR(gradientAssembly(1.91e-7 / 0.7, 1.0, 0.0), 2.73e-7, 1e-9);
  EXPECT_DOUBLE_EQ(gradientAssembly(0.25, 3.0, 1.0), 0.5);
  EXPECT_THROW(gradientAssembly(-1.0, 1.0, 0.0), InvalidArgument);
}

TEST(Report, TableLayout) {
  const auto t = reportTable({exactReport(QueueConfig{}, 40)}, {7});
  EXPECT_EQ(t.columns(), (std::vector<std::string>{"method", "k", "estimate", "ci",
                                                   "eventsUsed", "seeds"}));
  EXPECT_THROW(reportTable({exactReport(QueueConfig{}, 40)}, {}), InvalidArgument);
}
