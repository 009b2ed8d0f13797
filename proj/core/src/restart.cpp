#include "rare_reach/restart.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "rare_reach/error.hpp"
#include "rare_reach/oracle.hpp"
#include "rare_reach/parallel.hpp"
#include "rare_reach/workers.hpp"

namespace rare_reach {
namespace {

template <class... Fs>
struct Overloaded : Fs... {
  using Fs::operator()...;
};
template <class... Fs>
Overloaded(Fs...) -> Overloaded<Fs...>;

double sampleTruncatedExponential(double rate, double upper, Stream& stream) {
  const double mass = -std::expm1(-rate * upper);
  const double y = -std::log1p(-stream.uniform() * mass) / rate;
  if (y <= 0.0) return std::nextafter(0.0, upper);
  if (y >= upper) return std::nextafter(upper, 0.0);
  return y;
}

// Brownian motion with unit volatility restarted from its own QSD.
bool isSelfQsd(const Model& model, const RestartMeasure& measure) {
  const auto* m = std::get_if<LevyModel>(&model);
  const auto* q = std::get_if<BrownianQsd>(&measure);
  return m != nullptr && q != nullptr && !m->hasJumps() && m->sigma == 1.0 &&
         m->driftMu == q->mu;
}

}  // namespace

void validate(const RestartMeasure& measure) {
  std::visit(Overloaded{
                 [](const TruncatedExponential& m) {
                   if (!(m.rate > 0.0) || !(m.upper > 0.0))
                     throw InvalidArgument("TruncatedExponential needs rate > 0, upper > 0");
                 },
                 [](const BrownianQsd& m) {
                   if (!(m.mu > 0.0) || !(m.upper > 0.0))
                     throw InvalidArgument("BrownianQsd needs mu > 0, upper > 0");
                 },
                 [](const Empirical& m) {
                   if (m.samples.empty())
                     throw InvalidArgument("Empirical measure has no samples");
                   for (double y : m.samples)
                     if (!(y > 0.0 && y < m.upper))
                       throw InvalidArgument("Empirical sample " + std::to_string(y) +
                                             " outside (0, upper)");
                 }},
             measure);
}

double upperOf(const RestartMeasure& measure) {
  return std::visit([](const auto& m) { return m.upper; }, measure);
}

double sampleRestart(const RestartMeasure& measure, Stream& stream) {
  return std::visit(
      Overloaded{
          [&](const TruncatedExponential& m) {
            return sampleTruncatedExponential(m.rate, m.upper, stream);
          },
          [&](const BrownianQsd& m) {
            // Envelope: truncated Exp(mu); accept with probability sin(pi y / x).
            for (;;) {
              const double y = sampleTruncatedExponential(m.mu, m.upper, stream);
              if (stream.uniform() < std::sin(std::numbers::pi * y / m.upper)) return y;
            }
          },
          [&](const Empirical& m) {
            return m.samples[stream.below(m.samples.size())];
          }},
      measure);
}

double expMoment(const RestartMeasure& measure, double lambda) {
  return std::visit(
      Overloaded{
          [&](const TruncatedExponential& m) {
            const double d = lambda - m.rate;
            const double x = m.upper;
            // expm1(d x) / d, with its limit x at d = 0.
            const double ratio = std::abs(d * x) < 1e-10 ? x * (1.0 + 0.5 * d * x)
                                                         : std::expm1(d * x) / d;
            return m.rate * ratio / -std::expm1(-m.rate * x);
          },
          [&](const BrownianQsd& m) {
            const double x = m.upper;
            const double k = std::numbers::pi / x;
            const double d = lambda - m.mu;
            return oracle::brownianQsdNormalizer(m.mu, x) * k *
                   (1.0 + std::exp(d * x)) / (d * d + k * k);
          },
          [&](const Empirical& m) {
            std::vector<double> terms(m.samples.size());
            for (std::size_t i = 0; i < terms.size(); ++i)
              terms[i] = std::exp(lambda * m.samples[i]);
            return stats::pairwiseSum(terms) / static_cast<double>(terms.size());
          }},
      measure);
}

double restartDensity(const RestartMeasure& measure, double y) {
  return std::visit(
      Overloaded{
          [&](const TruncatedExponential& m) {
            if (y <= 0.0 || y >= m.upper) return 0.0;
            return m.rate * std::exp(-m.rate * y) / -std::expm1(-m.rate * m.upper);
          },
          [&](const BrownianQsd& m) { return oracle::brownianQsdDensity(m.mu, m.upper, y); },
          [&](const Empirical&) -> double {
            throw InvalidArgument("restartDensity: empirical measures have no density");
          }},
      measure);
}

CycleBatch simulateCycles(const Model& model, const RestartMeasure& measure,
                          std::size_t count, const SimConfig& cfg,
                          std::uint64_t experiment) {
  validate(measure);
  const double x = upperOf(measure);
  std::vector<CycleRecord> records(count);
  std::vector<unsigned char> dropped(count, 0);
  const StreamFamily family(cfg.masterSeed, experiment);
  parallelFor(count, cfg.workers, [&](std::size_t r) {
    Stream stream = family(r);
    records[r].start = sampleRestart(measure, stream);
    try {
      records[r].exit = simulateExit(model, records[r].start, x, cfg, stream);
    } catch (const BudgetCapExceeded&) {
      dropped[r] = 1;
    }
  });
  CycleBatch batch;
  for (std::size_t r = 0; r < count; ++r) {
    if (dropped[r])
      ++batch.discarded;
    else
      batch.cycles.push_back(records[r]);
  }
  return batch;
}

QEstimate estimateQ(const Model& model, const RestartMeasure& measure,
                    std::size_t reps, const SimConfig& cfg, std::uint64_t experiment) {
  if (reps < 1) throw InvalidArgument("estimateQ: reps must be >= 1");
  const CycleBatch batch = simulateCycles(model, measure, reps, cfg, experiment);
  QEstimate q;
  q.discarded = batch.discarded;
  q.upper.trials = batch.cycles.size();
  for (const auto& c : batch.cycles)
    if (c.exit.side == ExitSide::Upper) ++q.upper.successes;
  return q;
}

BetaEstimate betaRate(const Model& model, const RestartMeasure& measure,
                      std::size_t reps, const SimConfig& cfg, std::uint64_t experiment) {
  validate(measure);
  BetaEstimate out;
  if (isSelfQsd(model, measure)) {
    out.rate = oracle::brownianQsdRate(std::get<BrownianQsd>(measure).mu, upperOf(measure));
    out.exact = true;
    return out;
  }
  const CycleBatch batch = simulateCycles(model, measure, reps, cfg, experiment);
  if (batch.cycles.empty()) throw InsufficientSignal("betaRate: every cycle was discarded");
  std::vector<double> times;
  times.reserve(batch.cycles.size());
  for (const auto& c : batch.cycles) times.push_back(c.exit.time);
  const double mean = stats::summarize(times).mean;
  out.rate = 1.0 / mean;
  const double rate = out.rate;
  out.ksPValue =
      stats::ksTest(times, [rate](double t) { return t <= 0.0 ? 0.0 : -std::expm1(-rate * t); })
          .pValue;
  return out;
}

RestartRunResult simulateRestartedPassage(const Model& model,
                                          const RestartMeasure& measure,
                                          double budget, const SimConfig& cfg,
                                          Stream& stream) {
  const double x = upperOf(measure);
  RestartRunResult out;
  double elapsed = 0.0;
  double failedTotal = 0.0;
  std::size_t failed = 0;
  while (elapsed < budget) {
    const double y0 = sampleRestart(measure, stream);
    const ExitOutcome e = simulateExit(model, y0, x, cfg, stream);
    out.events += e.events;
    if (elapsed + e.time > budget) break;
    elapsed += e.time;
    ++out.cycleCount;
    if (e.side == ExitSide::Upper) {
      out.success = true;
      out.totalTime = elapsed;
      out.successCycle = e.time;
      break;
    }
    failedTotal += e.time;
    ++failed;
  }
  if (!out.success) out.totalTime = budget;
  if (failed > 0) out.meanFailedCycle = failedTotal / static_cast<double>(failed);
  return out;
}

std::vector<RestartRunResult> simulateRestartedRuns(const Model& model,
                                                    const RestartMeasure& measure,
                                                    double budget, std::size_t reps,
                                                    const SimConfig& cfg,
                                                    std::uint64_t experiment) {
  validate(measure);
  validate(model);
  if (!(budget > 0.0)) throw InvalidArgument("restarted run: budget must be > 0");
  std::vector<RestartRunResult> runs(reps);
  const StreamFamily family(cfg.masterSeed, experiment);
  parallelFor(reps, cfg.workers, [&](std::size_t r) {
    Stream stream = family(r);
    runs[r] = simulateRestartedPassage(model, measure, budget, cfg, stream);
  });
  return runs;
}

DirectPassage directPassageProbability(const Model& model, double x, double budget,
                                       std::size_t reps, const SimConfig& cfg,
                                       std::uint64_t experiment) {
  DirectPassage out;
  if (const auto* tp = std::get_if<TwoPoint>(&model)) {
    const int xi = static_cast<int>(std::ceil(x));
    const int t = static_cast<int>(std::floor(budget));
    if (oracle::exactWalkPassageCost(xi, t) <= oracle::kDpCap) {
      out.estimate = oracle::exactWalkPassage(tp->p, xi, t).at(t);
      out.exact = true;
      return out;
    }
  }
  if (isBrownian(model)) {
    const auto& m = std::get<LevyModel>(model);
    out.estimate = oracle::brownianPassageCdf(m.driftMu, m.sigma, x, budget);
    out.exact = true;
    return out;
  }
  const PassageEstimate est =
      estimatePassageProbability(model, x, budget, reps, true, cfg, experiment);
  out.estimate = est.estimate();
  out.stdError = est.stdError();
  return out;
}

GainReport restartGainReport(const Model& model, const RestartMeasure& measure,
                             double budget, std::size_t reps, const SimConfig& cfg,
                             std::uint64_t experiment) {
  validate(measure);
  const CumulantProfile profile(model);
  const double x = upperOf(measure);
  GainReport rep;
  rep.x = x;
  rep.budget = budget;

  const auto runs = simulateRestartedRuns(model, measure, budget, reps, cfg,
                                          experimentId(experiment, 1));
  stats::Proportion success;
  success.trials = runs.size();
  std::vector<double> failedMeans, successCycles;
  for (const auto& r : runs) {
    if (r.success) {
      ++success.successes;
      successCycles.push_back(r.successCycle);
    }
    if (r.meanFailedCycle > 0.0) failedMeans.push_back(r.meanFailedCycle);
  }
  rep.restartSuccess = success.estimate();
  rep.meanFailedCycle = stats::summarize(failedMeans).mean;
  rep.meanSuccessCycle = stats::summarize(successCycles).mean;

  const QEstimate q = estimateQ(model, measure, reps, cfg, experimentId(experiment, 2));
  rep.qHat = q.estimate();
  rep.betaHat = betaRate(model, measure, reps, cfg, experimentId(experiment, 3)).rate;
  rep.expMoment = expMoment(measure, profile.lambdaStar());

  const DirectPassage direct =
      directPassageProbability(model, x, budget, reps, cfg, experimentId(experiment, 4));
  rep.directProbability = direct.estimate;
  if (!(direct.estimate > 0.0))
    throw InsufficientSignal("restartGainReport: direct passage estimate is zero");
  const double scale = direct.estimate * budget * rep.expMoment;
  rep.gain = rep.restartSuccess / scale;
  const double relRestart =
      success.successes > 0 ? success.stdError() / success.estimate() : 0.0;
  const double relDirect = direct.stdError / direct.estimate;
  rep.ciHalfWidth =
      stats::kZ95 * rep.gain * std::sqrt(relRestart * relRestart + relDirect * relDirect);

  if (isSelfQsd(model, measure)) {
    const double mu = std::get<BrownianQsd>(measure).mu;
    const double rate = oracle::brownianQsdRate(mu, x) * oracle::brownianQsdUpper(mu, x);
    rep.analyticPrediction = -std::expm1(-rate * budget) / scale;
  } else {
    rep.analyticPrediction = std::numeric_limits<double>::quiet_NaN();
  }
  return rep;
}

}  // namespace rare_reach
