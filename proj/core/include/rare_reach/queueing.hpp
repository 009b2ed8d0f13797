#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "rare_reach/rng.hpp"
#include "rare_reach/table.hpp"

namespace rare_reach {

/// M/M/1/K queue under a threshold admission policy. Arrivals that find
/// the queue at capacity are lost.
struct QueueConfig {
  double arrivalRate = 0.7;
  double serviceRate = 1.0;
  int capacity = 40;
  /// States below this level are the absorbing set of the FV estimator and
  /// the renewal reference state.
  int absorbThreshold = 12;
  double rewardB = 1.0;
  double rewardBase = 2.0;
  int xRef = 0;
  double thetaThreshold = 39.5;

  double load() const { return arrivalRate / serviceRate; }
};

void validate(const QueueConfig& cfg);

/// Blocking reward B (1 + b^{x - xRef}) paid when an arrival is rejected in x.
double blockingReward(const QueueConfig& cfg, int x);

/// Exact stationary probability (1 - rho) rho^k / (1 - rho^{K+1}).
double stationaryPi(const QueueConfig& cfg, int k);

struct QueueRun {
  /// Time spent in each state 0..K.
  std::vector<double> occupation;
  /// First time each state was visited (NaN if never).
  std::vector<double> firstHit;
  std::uint64_t arrivals = 0;
  std::uint64_t departures = 0;
  double time = 0.0;
  int finalState = 0;

  std::uint64_t events() const { return arrivals + departures; }
};

/// Exact event-driven CTMC path from `initialState` up to `horizon`.
QueueRun simulateQueue(const QueueConfig& cfg, int initialState, double horizon,
                       Stream& stream);

struct EstimatorReport {
  int k = 0;
  std::string method;
  double estimate = 0.0;
  double ci = 0.0;
  std::uint64_t eventsUsed = 0;
  /// Runs, cycles or particles that reached k.
  std::uint64_t hits = 0;
  /// Parallel replicas or FV particles (1 otherwise).
  std::uint64_t particles = 1;
};

EstimatorReport exactReport(const QueueConfig& cfg, int k);

/// Time-average occupation of k over `reps` independent runs of length
/// `budget` started from state 0.
EstimatorReport naivePiHat(const QueueConfig& cfg, int k, double budget,
                           std::size_t reps, std::uint64_t masterSeed,
                           unsigned workers = 0);

/// Same estimator with runs repeated (in replication order) until
/// `totalEvents` arrivals plus departures have been simulated.
EstimatorReport naivePiHatWithEvents(const QueueConfig& cfg, int k, double budget,
                                     std::uint64_t totalEvents,
                                     std::uint64_t masterSeed);

struct VarianceLinkReport {
  int k = 0;
  double budget = 0.0;
  double c = 0.0;
  double varPi = 0.0;
  double varXi = 0.0;
  double pHit = 0.0;
  /// |varPi - varXi| / pHit: the constant needed at this k.
  double ratio = 0.0;
};

/// Compares the naive estimator with the surrogate c 1(tau(k) < B) on the
/// same runs. Throws InsufficientSignal when no run reaches k.
VarianceLinkReport varianceLinkCheck(const QueueConfig& cfg, int k, double budget,
                                     double c, std::size_t reps,
                                     std::uint64_t masterSeed, unsigned workers = 0);

/// Particle count for a total event budget: optimalParticles on the jump
/// chain (a +-1 walk with p = lambda / (lambda + mu)) with budget slope
/// eventBudget / (k - J).
int queueParticleCount(const QueueConfig& cfg, int k, std::uint64_t eventBudget);

struct RenewalOptions {
  std::uint64_t totalEvents = 10'000'000;
  /// Replicas sharing the hit-estimation budget; 0 selects queueParticleCount.
  std::uint64_t parallel = 0;
  /// Fraction of events spent on the mean return time to J.
  double returnShare = 0.1;
  unsigned workers = 0;
};

/**
 * pi(k) = E_J[time in k per cycle] / E[cycle], cycles being successive
 * entrances to J = cfg.absorbThreshold.
 *
 * The cycle mean comes from one long path; the numerator from cycles run by
 * independent replicas, each stopping at the first cycle end after its share
 * of the event budget. Down-steps from J end a cycle's contribution at once,
 * so only excursions above J are simulated.
 */
EstimatorReport renewalEstimator(const QueueConfig& cfg, int k,
                                 const RenewalOptions& options,
                                 std::uint64_t masterSeed);

struct FvQueueOptions {
  int particles = 1000;
  std::uint64_t totalEvents = 10'000'000;
  double cycleShare = 0.1;
  /// Stop once the survival estimate drops below this value.
  double survivalFloor = 1e-12;
};

/**
 * FV particles on {J..K} killed below J, all started at J. The survival
 * function is estimated as (1 - 1/N)^{absorptions}; the integral of
 * survival times the FV frequency of k estimates E_J[time in k before
 * leaving], which is normalized by the mean time between entrances to J
 * from J-1.
 */
EstimatorReport fvEstimator(const QueueConfig& cfg, int k, const FvQueueOptions& options,
                            std::uint64_t masterSeed);

/// p(K-1) [Q(K-1, accept) - Q(K-1, block)].
double gradientAssembly(double pHatKm1, double qAccept, double qBlock);

/// Columns: method, k, estimate, ci, eventsUsed, seeds.
ResultTable reportTable(const std::vector<EstimatorReport>& reports,
                        const std::vector<std::uint64_t>& seeds);

}  // namespace rare_reach
