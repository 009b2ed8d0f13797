#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "rare_reach/cumulant.hpp"
#include "rare_reach/paths.hpp"
#include "rare_reach/restart.hpp"
#include "rare_reach/rng.hpp"
#include "rare_reach/table.hpp"

namespace rare_reach {

/**
 * Fleming-Viot system for a discrete-time chain on states 0..n-1 killed with
 * the row deficit of a sub-stochastic kernel.
 *
 * All particles move synchronously. Particles killed in a step are processed
 * in ascending index; each copies a particle chosen uniformly among those
 * that survived the step.
 */
class DiscreteFv {
 public:
  DiscreteFv(std::vector<std::vector<double>> kernel, std::vector<int> initial,
             Stream stream);

  void step();
  void run(std::size_t steps);
  /// Runs until `factor` times the mean absorption time (estimated on the
  /// fly as steps * N / absorptions) has elapsed, at least `minSteps`.
  void burnIn(double factor = 10.0, std::size_t minSteps = 100);

  std::size_t particleCount() const { return positions_.size(); }
  const std::vector<int>& positions() const { return positions_; }
  std::size_t stateCount() const { return kernel_.size(); }
  std::uint64_t steps() const { return steps_; }
  std::uint64_t absorptions() const { return absorptions_; }

  /// Current per-state frequencies.
  std::vector<double> empiricalDistribution() const;
  /// Per-state frequencies averaged over every step since the last reset.
  std::vector<double> occupationDistribution() const;
  void resetOccupation();

 private:
  std::vector<std::vector<double>> kernel_;  // cumulative rows
  std::vector<double> survival_;
  std::vector<int> positions_;
  std::vector<double> occupation_;
  std::uint64_t occupationSteps_ = 0;
  Stream stream_;
  std::uint64_t steps_ = 0;
  std::uint64_t absorptions_ = 0;
};

/**
 * Fleming-Viot system for a Levy model on (0, x), absorbed at either end.
 *
 * Every particle advances on a shared clock in sub-steps of cfg.dt with the
 * same jump and bridge scheme as single paths. A particle absorbed during a
 * sub-step jumps at the sub-step end to the position of a uniformly chosen
 * particle that survived it (ascending index order).
 */
class IntervalFv {
 public:
  IntervalFv(LevyModel model, double x, std::vector<double> initial,
             SimConfig cfg, Stream stream);

  void step();
  /// Advances by at least `duration` (whole sub-steps).
  void run(double duration);
  void burnIn(double factor = 10.0, double minDuration = 1.0);

  std::size_t particleCount() const { return positions_.size(); }
  const std::vector<double>& positions() const { return positions_; }
  double time() const { return time_; }
  std::uint64_t absorptions() const { return absorptions_; }

  /// Current positions as a restart measure.
  Empirical empiricalMeasure() const;
  /// Appends the current positions to the pooled sample.
  void recordSnapshot();
  const std::vector<double>& pooled() const { return pooled_; }
  void clearPooled() { pooled_.clear(); }
  /// Columns: time, particle, position.
  ResultTable snapshotTable() const;

 private:
  bool advance(std::size_t i, double h);

  LevyModel model_;
  double x_;
  SimConfig cfg_;
  Stream stream_;
  std::vector<double> positions_;
  std::vector<double> nextJump_;
  std::vector<double> pooled_;
  double time_ = 0.0;
  std::uint64_t absorptions_ = 0;
};

/// TV distance between binned samples on (0, x) and the binned QSD density
/// of Brownian motion with drift -mu.
double brownianQsdTv(const std::vector<double>& samples, double mu, double x,
                     std::size_t bins);

struct DiscreteCurveSpec {
  std::vector<std::vector<double>> kernel;
  std::vector<int> particleGrid;
  std::size_t sampleSteps = 2000;
  std::size_t seeds = 10;
  /// Average the empirical measure over sampleSteps instead of reading the
  /// final snapshot.
  bool timeAverage = true;
};

/// TV distance to the eigenvector QSD per particle count.
/// Columns: N, meanTv, minTv, maxTv, seeds.
ResultTable discreteConvergenceCurve(const DiscreteCurveSpec& spec,
                                     std::uint64_t masterSeed, unsigned workers = 0);

struct BrownianCurveSpec {
  double mu = 0.2;
  double x = 10.0;
  std::vector<int> particleGrid;
  double sampleDuration = 50.0;
  double snapshotEvery = 1.0;
  std::size_t bins = 10;
  std::size_t seeds = 10;
};

/// TV distance of binned FV samples to the closed-form QSD per particle
/// count. Columns: N, meanTv, minTv, maxTv, seeds.
ResultTable brownianConvergenceCurve(const BrownianCurveSpec& spec,
                                     const SimConfig& cfg);

/// Per-seed TV values behind a curve row, in seed order.
std::vector<double> brownianTvBySeed(const BrownianCurveSpec& spec, int particles,
                                     const SimConfig& cfg);
std::vector<double> discreteTvBySeed(const DiscreteCurveSpec& spec, int particles,
                                     std::uint64_t masterSeed, unsigned workers = 0);

}  // namespace rare_reach
