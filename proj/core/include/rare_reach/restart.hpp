#pragma once

#include <cstddef>
#include <cstdint>
#include <variant>
#include <vector>

#include "rare_reach/cumulant.hpp"
#include "rare_reach/paths.hpp"
#include "rare_reach/rng.hpp"
#include "rare_reach/stats.hpp"

namespace rare_reach {

/// Density rate e^{-rate y} / (1 - e^{-rate upper}) on (0, upper).
struct TruncatedExponential {
  double rate = 1.0;
  double upper = 1.0;
};

/// Quasi-stationary law on (0, upper) of unit-volatility Brownian motion with
/// drift -mu: D sin(pi y / upper) e^{-mu y}.
struct BrownianQsd {
  double mu = 1.0;
  double upper = 1.0;
};

/// Uniform over a finite list of points in (0, upper).
struct Empirical {
  std::vector<double> samples;
  double upper = 1.0;
};

using RestartMeasure = std::variant<TruncatedExponential, BrownianQsd, Empirical>;

void validate(const RestartMeasure& measure);
double upperOf(const RestartMeasure& measure);

/// A point in (0, upper); never a boundary value.
double sampleRestart(const RestartMeasure& measure, Stream& stream);

/// Integral of e^{lambda y} against the measure.
double expMoment(const RestartMeasure& measure, double lambda);

/// Density at y for the continuous variants; throws InvalidArgument for
/// Empirical.
double restartDensity(const RestartMeasure& measure, double y);

struct CycleRecord {
  double start = 0.0;
  ExitOutcome exit;
};

struct CycleBatch {
  std::vector<CycleRecord> cycles;
  /// Cycles dropped after hitting the per-cycle event cap.
  std::size_t discarded = 0;
};

/// Independent cycles: restart from the measure, run until exit from (0, x).
CycleBatch simulateCycles(const Model& model, const RestartMeasure& measure,
                          std::size_t count, const SimConfig& cfg,
                          std::uint64_t experiment);

struct QEstimate {
  stats::Proportion upper;
  std::size_t discarded = 0;

  double estimate() const { return upper.estimate(); }
  double halfWidth95() const { return upper.halfWidth95(); }
};

/// Fraction of cycles that leave (0, x) through the top.
QEstimate estimateQ(const Model& model, const RestartMeasure& measure,
                    std::size_t reps, const SimConfig& cfg,
                    std::uint64_t experiment);

struct BetaEstimate {
  double rate = 0.0;
  /// True when the closed form was used (Brownian motion restarted from its
  /// own QSD); then ksPValue is 1.
  bool exact = false;
  /// Goodness of fit of the cycle times to Exp(rate).
  double ksPValue = 1.0;
};

/**
 * Absorption rate of a cycle. Closed form (mu^2 + pi^2/x^2) / 2 for a
 * unit-volatility Brownian model restarted from its QSD; otherwise the
 * maximum-likelihood exponential rate of `reps` simulated cycle lengths.
 */
BetaEstimate betaRate(const Model& model, const RestartMeasure& measure,
                      std::size_t reps, const SimConfig& cfg,
                      std::uint64_t experiment);

struct RestartRunResult {
  bool success = false;
  /// Time of the successful exit, or the budget on failure.
  double totalTime = 0.0;
  /// Completed cycles, including the successful one.
  std::size_t cycleCount = 0;
  /// Mean length of the completed cycles that exited at 0 (eta).
  double meanFailedCycle = 0.0;
  /// Length of the successful cycle (zeta); 0 on failure.
  double successCycle = 0.0;
  std::uint64_t events = 0;
};

/**
 * Restarted process on (0, x): cycles concatenate until one exits at the top
 * (success) or the accumulated time would pass `budget`. A cycle that
 * straddles the budget counts as failure.
 */
RestartRunResult simulateRestartedPassage(const Model& model,
                                          const RestartMeasure& measure,
                                          double budget, const SimConfig& cfg,
                                          Stream& stream);

std::vector<RestartRunResult> simulateRestartedRuns(const Model& model,
                                                    const RestartMeasure& measure,
                                                    double budget, std::size_t reps,
                                                    const SimConfig& cfg,
                                                    std::uint64_t experiment);

/// P(tau(x) <= budget) without restart: exact for +-1 walks (when the dense
/// table fits) and Brownian motion, tilted importance sampling otherwise.
struct DirectPassage {
  double estimate = 0.0;
  double stdError = 0.0;
  bool exact = false;
};

DirectPassage directPassageProbability(const Model& model, double x, double budget,
                                       std::size_t reps, const SimConfig& cfg,
                                       std::uint64_t experiment);

/**
 * G = P(tau^nu(x) <= B) / [P(tau(x) <= B) B E_nu e^{lambdaStar y}].
 *
 * For Brownian motion with QSD restart, analyticPrediction replaces the
 * numerator by 1 - exp(-beta q B), the exact law of tau^nu.
 */
struct GainReport {
  double x = 0.0;
  double budget = 0.0;
  double gain = 0.0;
  double ciHalfWidth = 0.0;
  double restartSuccess = 0.0;
  double directProbability = 0.0;
  double qHat = 0.0;
  double betaHat = 0.0;
  double expMoment = 0.0;
  /// NaN unless the closed form applies.
  double analyticPrediction = 0.0;
  double meanFailedCycle = 0.0;
  double meanSuccessCycle = 0.0;
};

GainReport restartGainReport(const Model& model, const RestartMeasure& measure,
                             double budget, std::size_t reps, const SimConfig& cfg,
                             std::uint64_t experiment);

}  // namespace rare_reach
