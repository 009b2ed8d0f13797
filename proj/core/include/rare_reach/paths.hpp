#pragma once

#include <cstdint>

#include "rare_reach/cumulant.hpp"
#include "rare_reach/rng.hpp"

namespace rare_reach {

struct SimConfig {
  std::uint64_t masterSeed = 0;
  /// Largest Brownian sub-step between jumps of a Levy path.
  double dt = 0.01;
  /// Test for barrier crossings inside each sub-step with the Brownian-bridge
  /// crossing probability.
  bool bridgeCorrection = true;
  /// Safety cap on jumps + sub-steps (or walk steps) per trajectory.
  std::uint64_t maxEvents = 100'000'000;
  /// Worker threads for replication loops; 0 means hardware concurrency.
  unsigned workers = 0;
};

void validate(const SimConfig& cfg);

struct PassageOutcome {
  bool hit = false;
  /// Steps for walks, real time for Levy paths. Equals the budget on a miss.
  double time = 0.0;
  double terminalPosition = 0.0;
  /// terminalPosition - barrier on a hit, 0 otherwise.
  double overshoot = 0.0;
  /// Log of the likelihood ratio dP/dP^lambda on F_tau when simulated under a
  /// tilted law; 0 for plain simulation.
  double logWeight = 0.0;
  std::uint64_t events = 0;
};

enum class ExitSide { Upper, Lower };

struct ExitOutcome {
  ExitSide side = ExitSide::Lower;
  double time = 0.0;
  double terminalPosition = 0.0;
  std::uint64_t events = 0;
};

/// First passage of a random walk from 0 over x within `budget` steps.
PassageOutcome simulateWalkPassage(const IncrementLaw& law, double x,
                                   std::int64_t budget, Stream& stream);

/**
 * First passage of a Levy path from 0 over x within real time `budget`.
 *
 * Jumps occur at exact exponential times; in between, the diffusion moves in
 * Gaussian sub-steps of length <= cfg.dt. A crossing detected by the bridge
 * test or at a sub-step end places the path exactly on the barrier at the end
 * of that sub-step. Throws EventCapExceeded past cfg.maxEvents.
 */
PassageOutcome simulateLevyPassage(const LevyModel& model, double x,
                                   double budget, const SimConfig& cfg,
                                   Stream& stream);

/// Dispatches on the model family. Walk budgets are floored to whole steps.
PassageOutcome simulatePassage(const Model& model, double x, double budget,
                               const SimConfig& cfg, Stream& stream);

/// Default number of events before simulateExit gives up.
inline constexpr std::uint64_t kExitEventCap = 10'000'000;

/**
 * First exit from (0, x) started at y0. Both barriers are bridge-corrected
 * for Levy paths. Throws BudgetCapExceeded after `budgetCap` events.
 */
ExitOutcome simulateExit(const Model& model, double y0, double x,
                         const SimConfig& cfg, Stream& stream,
                         std::uint64_t budgetCap = kExitEventCap);

/// exp(-lambda Z(tau) + tau psi(lambda)).
double passageWeight(const PassageOutcome& outcome, double lambda,
                     double psiAtLambda);

/// Simulates under tilt(model, lambda) and records logWeight so that
/// E^lambda[1{hit} exp(logWeight)] = P(tau(x) <= budget).
PassageOutcome simulateTiltedPassage(const Model& model, double lambda,
                                     double x, double budget,
                                     const SimConfig& cfg, Stream& stream);

}  // namespace rare_reach
