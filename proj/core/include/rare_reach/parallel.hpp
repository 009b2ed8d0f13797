#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "rare_reach/cumulant.hpp"
#include "rare_reach/paths.hpp"
#include "rare_reach/table.hpp"

namespace rare_reach {

/// P(min of N iid passage times <= t) given P(tau <= t) = pSingle.
double minPassageProbability(double pSingle, int particles);

/**
 * N particles share the budget B(x) = budgetSlope * x, each running for
 * B(x) / N. Cells compare that against one particle with the full budget.
 */
struct ParallelSpec {
  Model model = TwoPoint{0.45};
  double budgetSlope = 300.0;
  std::vector<double> barriers;
  std::vector<int> particleGrid;
  std::size_t reps = 1000;
  /// Simulate under P^{lambdaStar} and reweight; otherwise plain Monte Carlo.
  bool tiltAtLambdaStar = true;
};

void validate(const ParallelSpec& spec);

/**
 * Importance-sampling estimate of P(tau(x) <= budget).
 *
 * Weights are stored relative to exp(logScale) so that values far below the
 * double range stay representable: estimate = scaledMean * exp(logScale).
 */
struct PassageEstimate {
  std::size_t reps = 0;
  std::size_t hits = 0;
  double scaledMean = 0.0;
  double scaledStdError = 0.0;
  double logScale = 0.0;

  double estimate() const;
  double stdError() const;
  /// stdError / estimate; +inf when nothing hit.
  double relativeError() const;
};

/// `experiment` selects the stream family; replication r uses stream r.
PassageEstimate estimatePassageProbability(const Model& model, double x,
                                           double budget, std::size_t reps,
                                           bool tiltAtLambdaStar,
                                           const SimConfig& cfg,
                                           std::uint64_t experiment);

struct RatioCell {
  double x = 0.0;
  int particles = 1;
  /// P(tau^(N)(x) <= B/N) / P(tau(x) <= B).
  double ratio = 0.0;
  double ciHalfWidth = 0.0;
  /// Single particle, full budget.
  double pSingle = 0.0;
  /// N particles, budget B/N each.
  double pMin = 0.0;
  /// Empty when the cell is valid; otherwise why the ratio is not meaningful.
  std::string flag;
};

/// Stream family ids used by estimateRatio, exposed so tests can replay them.
std::uint64_t denominatorExperiment(double x);
std::uint64_t numeratorExperiment(double x, int particles);

RatioCell estimateRatio(const ParallelSpec& spec, double x, int particles,
                        const SimConfig& cfg);

/// Same as above with an already computed full-budget estimate.
RatioCell estimateRatio(const ParallelSpec& spec, double x, int particles,
                        const PassageEstimate& fullBudget, const SimConfig& cfg);

/// Columns: x, N, ratio, ci, pSingle, pMin, thresholdN, nStar, flag.
ResultTable sweepPhaseTransition(const ParallelSpec& spec, const SimConfig& cfg);

}  // namespace rare_reach
