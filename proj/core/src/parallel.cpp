#include "rare_reach/parallel.hpp"

#include <bit>
#include <cmath>
#include <limits>

#include "rare_reach/error.hpp"
#include "rare_reach/stats.hpp"
#include "rare_reach/workers.hpp"

namespace rare_reach {
namespace {

std::uint64_t doubleBits(double v) { return std::bit_cast<std::uint64_t>(v); }

// Walk budgets are whole steps.
double effectiveBudget(const Model& model, double budget) {
  return isDiscreteTime(model) ? std::floor(budget) : budget;
}

}  // namespace

double minPassageProbability(double pSingle, int particles) {
  if (!(pSingle >= 0.0 && pSingle <= 1.0))
    throw InvalidArgument("minPassageProbability: pSingle outside [0, 1]");
  if (particles < 1) throw InvalidArgument("minPassageProbability: N must be >= 1");
  if (pSingle == 1.0) return 1.0;
  return -std::expm1(static_cast<double>(particles) * std::log1p(-pSingle));
}

void validate(const ParallelSpec& spec) {
  validate(spec.model);
  if (!(spec.budgetSlope > 0.0))
    throw InvalidArgument("ParallelSpec: budgetSlope must be > 0");
  for (double x : spec.barriers)
    if (!(x > 0.0)) throw InvalidArgument("ParallelSpec: barriers must be > 0");
  for (int n : spec.particleGrid)
    if (n < 1) throw InvalidArgument("ParallelSpec: particle counts must be >= 1");
  if (spec.reps < 1) throw InvalidArgument("ParallelSpec: reps must be >= 1");
}

double PassageEstimate::estimate() const { return scaledMean * std::exp(logScale); }
double PassageEstimate::stdError() const { return scaledStdError * std::exp(logScale); }
double PassageEstimate::relativeError() const {
  if (!(scaledMean > 0.0)) return std::numeric_limits<double>::infinity();
  return scaledStdError / scaledMean;
}

PassageEstimate estimatePassageProbability(const Model& model, double x,
                                           double budget, std::size_t reps,
                                           bool tiltAtLambdaStar,
                                           const SimConfig& cfg,
                                           std::uint64_t experiment) {
  double lambda = 0.0;
  if (tiltAtLambdaStar) lambda = CumulantProfile(model).lambdaStar();
  PassageEstimate out;
  out.reps = reps;
  out.logScale = -lambda * x;
  std::vector<double> weights(reps, 0.0);
  std::vector<unsigned char> hits(reps, 0);
  const StreamFamily family(cfg.masterSeed, experiment);
  parallelFor(reps, cfg.workers, [&](std::size_t r) {
    Stream stream = family(r);
    const PassageOutcome o =
        simulateTiltedPassage(model, lambda, x, budget, cfg, stream);
    if (o.hit) {
      hits[r] = 1;
      weights[r] = std::exp(o.logWeight - out.logScale);
    }
  });
  for (unsigned char h : hits) out.hits += h;
  const stats::Summary s = stats::summarize(weights);
  out.scaledMean = s.mean;
  out.scaledStdError = s.stdError();
  return out;
}

std::uint64_t denominatorExperiment(double x) {
  return experimentId(experimentId("parallel.full-budget"), doubleBits(x));
}

std::uint64_t numeratorExperiment(double x, int particles) {
  return experimentId(experimentId(experimentId("parallel.split-budget"), doubleBits(x)),
                      static_cast<std::uint64_t>(particles));
}

RatioCell estimateRatio(const ParallelSpec& spec, double x, int particles,
                        const SimConfig& cfg) {
  validate(spec);
  const PassageEstimate full = estimatePassageProbability(
      spec.model, x, effectiveBudget(spec.model, spec.budgetSlope * x), spec.reps,
      spec.tiltAtLambdaStar, cfg, denominatorExperiment(x));
  return estimateRatio(spec, x, particles, full, cfg);
}

RatioCell estimateRatio(const ParallelSpec& spec, double x, int particles,
                        const PassageEstimate& full, const SimConfig& cfg) {
  if (particles < 1) throw InvalidArgument("estimateRatio: N must be >= 1");
  RatioCell cell;
  cell.x = x;
  cell.particles = particles;
  cell.pSingle = full.estimate();
  if (particles == 1) {
    cell.pMin = cell.pSingle;
    cell.ratio = 1.0;
    return cell;
  }
  const double split = effectiveBudget(spec.model, spec.budgetSlope * x / particles);
  if (!(split > 0.0)) {
    cell.flag = "degenerate-budget";
    return cell;
  }
  if (full.hits == 0) {
    cell.flag = "insufficient-signal";
    cell.ratio = std::numeric_limits<double>::quiet_NaN();
    cell.ciHalfWidth = std::numeric_limits<double>::quiet_NaN();
    return cell;
  }
  const PassageEstimate part =
      estimatePassageProbability(spec.model, x, split, spec.reps, spec.tiltAtLambdaStar,
                                 cfg, numeratorExperiment(x, particles));
  const double a = part.estimate();
  cell.pMin = minPassageProbability(std::min(1.0, a), particles);
  if (part.hits == 0) return cell;  // ratio 0, ci 0

  // ratio = g(a) / b with g(a) = 1 - (1 - a)^N; written as (g(a)/a) (a/b) so
  // the common scale cancels before anything can underflow.
  const double n = static_cast<double>(particles);
  const double aCapped = std::min(a, 1.0);
  const double gOverA =
      aCapped > 0.0 ? minPassageProbability(aCapped, particles) / aCapped : n;
  const double aOverB = part.scaledMean / full.scaledMean *
                        std::exp(part.logScale - full.logScale);
  cell.ratio = gOverA * aOverB;
  // Delta method: d log g / d log a = g'(a) a / g(a), g'(a) = N (1 - a)^{N-1}.
  const double elasticity =
      aCapped < 1.0 ? n * std::exp((n - 1.0) * std::log1p(-aCapped)) / gOverA : 0.0;
  const double relA = part.relativeError();
  const double relB = full.relativeError();
  const double relVar = elasticity * elasticity * relA * relA + relB * relB;
  cell.ciHalfWidth = stats::kZ95 * cell.ratio * std::sqrt(relVar);
  return cell;
}

ResultTable sweepPhaseTransition(const ParallelSpec& spec, const SimConfig& cfg) {
  validate(spec);
  const CumulantProfile profile(spec.model);
  const double threshold = particleThreshold(profile, spec.budgetSlope);
  const int nStar = optimalParticles(profile, spec.budgetSlope);
  ResultTable table({"x", "N", "ratio", "ci", "pSingle", "pMin", "thresholdN",
                     "nStar", "flag"});
  for (double x : spec.barriers) {
    PassageEstimate full;
    std::string fullError;
    try {
      full = estimatePassageProbability(
          spec.model, x, effectiveBudget(spec.model, spec.budgetSlope * x), spec.reps,
          spec.tiltAtLambdaStar, cfg, denominatorExperiment(x));
    } catch (const Error& e) {
      fullError = e.what();
    }
    for (int n : spec.particleGrid) {
      RatioCell cell;
      cell.x = x;
      cell.particles = n;
      if (!fullError.empty()) {
        cell.ratio = std::numeric_limits<double>::quiet_NaN();
        cell.flag = "error: " + fullError;
      } else {
        try {
          cell = estimateRatio(spec, x, n, full, cfg);
        } catch (const Error& e) {
          cell.ratio = std::numeric_limits<double>::quiet_NaN();
          cell.flag = std::string("error: ") + e.what();
        }
      }
      table.addRow({cell.x, static_cast<std::int64_t>(cell.particles), cell.ratio,
                    cell.ciHalfWidth, cell.pSingle, cell.pMin, threshold,
                    static_cast<std::int64_t>(nStar), cell.flag});
    }
  }
  table.setMetadata("model", describe(spec.model));
  table.setMetadata("budgetSlope", formatNumber(spec.budgetSlope));
  table.setMetadata("reps", std::to_string(spec.reps));
  table.setMetadata("lambdaStar", formatNumber(profile.lambdaStar()));
  return table;
}

}  // namespace rare_reach
