#include "cli/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include "rare_reach/cumulant.hpp"
#include "rare_reach/error.hpp"
#include "rare_reach/flemingviot.hpp"
#include "rare_reach/oracle.hpp"
#include "rare_reach/parallel.hpp"
#include "rare_reach/paths.hpp"
#include "rare_reach/queueing.hpp"
#include "rare_reach/restart.hpp"
#include "rare_reach/rng.hpp"
#include "rare_reach/stats.hpp"
#include "rare_reach/version.hpp"

namespace rare_reach::cli {
namespace {

struct Key {
  std::string key;
  std::string value;
  std::string help;
};
using Keys = std::vector<Key>;

struct Family {
  std::string name;
  Keys keys;
};

const std::vector<Family>& families() {
  static const std::vector<Family> all = {
      {"two-point", {{"p", "0.45", "probability of a +1 step; must be below 0.5"}}},
      {"normal",
       {{"mean", "-0.2", "mean step; must be negative"},
        {"var", "1", "step variance"}}},
      {"levy",
       {{"mu", "1", "drift is -mu per unit time"},
        {"sigma", "1", "diffusion coefficient"},
        {"r", "2", "rate of positive jumps"},
        {"alpha", "4", "exponential rate of positive jump sizes"},
        {"s", "3", "rate of negative jumps"},
        {"beta", "1", "exponential rate of negative jump sizes"}}},
      {"brownian",
       {{"mu", "0.2", "drift is -mu per unit time"},
        {"sigma", "1", "diffusion coefficient"}}},
      {"birth-death",
       {{"states", "4", "interior states of the killed chain"},
        {"p-up", "0.3", "up probability per step"},
        {"p-down", "0.4", "down probability per step; killed below state 0"}}},
      {"mm1k",
       {{"arrival-rate", "0.7", "Poisson arrival rate"},
        {"service-rate", "1", "exponential service rate; load must be below 1"},
        {"capacity", "40", "K"},
        {"absorb-threshold", "12", "J: renewal state and FV absorption level"},
        {"reward-b", "1", "blocking reward scale"},
        {"reward-base", "2", "blocking reward base"},
        {"x-ref", "0", "blocking reward reference state"},
        {"theta-threshold", "39.5", "admission threshold parameter"}}},
  };
  return all;
}

const Family& familyNamed(const std::string& name) {
  for (const auto& f : families())
    if (f.name == name) return f;
  throw ConfigError("model.family", "unknown family '" + name + "'");
}

struct KindSchema {
  std::string name;
  std::vector<std::string> families;
  /// Empty when the kind takes no replication count.
  std::string reps;
  std::string repsHelp;
  Keys study;
};

const std::vector<KindSchema>& schemas() {
  static const std::vector<KindSchema> all = {
      {"cumulant-report",
       {"levy", "two-point", "normal", "brownian"},
       "",
       "",
       {{"budget-slopes", "15", "budget slopes C of B(x) = C x, one row each"}}},
      {"parallel-sweep",
       {"two-point", "normal", "levy", "brownian"},
       "1000",
       "replications per estimate",
       {{"budget-slope", "300", "C in B(x) = C x"},
        {"barriers", "20, 100, 500", "barrier levels x"},
        {"particles", "1..60", "particle counts N (ranges a..b allowed)"},
        {"tilt", "true", "simulate under the lambda* tilt and reweight"},
        {"dt", "0.01", "Levy sub-step"},
        {"bridge", "true", "Brownian-bridge crossing correction"},
        {"max-events", "100000000", "per-trajectory event cap"}}},
      {"restart-run",
       {"levy", "brownian", "two-point", "normal"},
       "100",
       "restarted runs per horizon",
       {{"barrier", "20", "upper barrier x of the interval (0, x)"},
        {"measure", "truncated-exponential", "truncated-exponential or brownian-qsd"},
        {"measure-rate", "0.1", "rate of the truncated exponential"},
        {"measure-mu", "0.2", "drift parameter of the Brownian QSD"},
        {"horizons", "50, 300, 1500", "time budgets"},
        {"dt", "0.01", "Levy sub-step"},
        {"bridge", "true", "Brownian-bridge crossing correction"}}},
      {"restart-gain",
       {"brownian", "levy", "two-point", "normal"},
       "2000",
       "cycles and runs per estimate",
       {{"barriers", "6, 8, 10", "barrier levels x"},
        {"budget-slope", "20", "C in B(x) = C x"},
        {"measure", "brownian-qsd", "truncated-exponential or brownian-qsd"},
        {"measure-rate", "0.1", "rate of the truncated exponential"},
        {"measure-mu", "0.2", "drift parameter of the Brownian QSD"},
        {"dt", "0.01", "Levy sub-step"},
        {"bridge", "true", "Brownian-bridge crossing correction"}}},
      {"fv-converge",
       {"birth-death", "brownian"},
       "10",
       "independent particle systems per N",
       {{"particles", "10, 100, 1000", "particle counts N"},
        {"sample-steps", "2000", "birth-death: steps averaged after burn-in"},
        {"time-average", "true", "birth-death: average over sample-steps"},
        {"barrier", "10", "brownian: interval (0, x)"},
        {"duration", "50", "brownian: sampling time after burn-in"},
        {"snapshot-every", "1", "brownian: time between pooled snapshots"},
        {"bins", "10", "brownian: histogram bins for the TV distance"},
        {"dt", "0.01", "brownian: sub-step"}}},
      {"mm1-appendix1",
       {"mm1k"},
       "10000",
       "independent runs from state 0 per k",
       {{"states", "4, 6, 8, 10, 12", "target states k"},
        {"budget-slope", "5", "c in B(k) = c k"},
        {"surrogate-c", "1", "constant of the surrogate c 1(tau(k) < B(k))"}}},
      {"mm1k-appendix3",
       {"mm1k"},
       "10",
       "seeds per (method, budget); seed i is the master seed plus i",
       {{"target", "40", "state k"},
        {"event-budgets", "1e5, 1e6, 1e7", "total simulated events per estimate"},
        {"methods", "renewal, naive", "any of renewal, naive, fv"},
        {"naive-slope", "1", "naive run length c k"},
        {"fv-particles", "1000", "particles of the fv method"},
        {"return-share", "0.1", "renewal: event share for the mean cycle"}}},
  };
  return all;
}

const KindSchema& schemaNamed(const std::string& kind) {
  for (const auto& s : schemas())
    if (s.name == kind) return s;
  std::string known;
  for (const auto& s : schemas()) known += (known.empty() ? "" : ", ") + s.name;
  throw ConfigError("experiment.kind", "unknown kind '" + kind + "' (known: " + known + ")");
}

// ---------------------------------------------------------------- typed access

class Reader {
 public:
  explicit Reader(const ConfigDocument& doc) : doc_(doc) {}
  const std::string& str(const std::string& s, const std::string& k) const {
    return doc_.get(s, k);
  }
  double real(const std::string& s, const std::string& k) const {
    return parseDouble(s + "." + k, doc_.get(s, k));
  }
  double positive(const std::string& s, const std::string& k) const {
    const double v = real(s, k);
    if (!(v > 0.0)) throw ConfigError(s + "." + k, "must be positive");
    return v;
  }
  std::int64_t integer(const std::string& s, const std::string& k) const {
    return parseInt(s + "." + k, doc_.get(s, k));
  }
  std::int64_t count(const std::string& s, const std::string& k) const {
    const auto v = integer(s, k);
    if (v <= 0) throw ConfigError(s + "." + k, "must be a positive integer");
    return v;
  }
  std::uint64_t unsignedInt(const std::string& s, const std::string& k) const {
    return parseUint(s + "." + k, doc_.get(s, k));
  }
  bool flag(const std::string& s, const std::string& k) const {
    return parseBool(s + "." + k, doc_.get(s, k));
  }
  std::vector<double> reals(const std::string& s, const std::string& k) const {
    return parseDoubleList(s + "." + k, doc_.get(s, k));
  }
  std::vector<int> ints(const std::string& s, const std::string& k) const {
    return parseIntList(s + "." + k, doc_.get(s, k));
  }
  std::vector<std::string> words(const std::string& s, const std::string& k) const {
    std::vector<std::string> out;
    std::stringstream in(doc_.get(s, k));
    std::string w;
    while (std::getline(in, w, ',')) {
      w.erase(0, w.find_first_not_of(" \t"));
      w.erase(w.find_last_not_of(" \t") + 1);
      if (!w.empty()) out.push_back(w);
    }
    if (out.empty()) throw ConfigError(s + "." + k, "expected a non-empty list");
    return out;
  }

 private:
  const ConfigDocument& doc_;
};

// Module errors raised while validating are reported against `key`.
template <class F>
auto checked(const std::string& key, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(key, e.what());
  }
}

std::string cramerKey(const std::string& family) {
  if (family == "two-point") return "model.p";
  if (family == "normal") return "model.mean";
  return "model.mu";
}

Model readModel(const Reader& r) {
  const std::string family = r.str("model", "family");
  Model model;
  if (family == "two-point") {
    const double p = r.real("model", "p");
    if (!(p > 0.0 && p < 1.0)) throw ConfigError("model.p", "must lie in (0, 1)");
    model = TwoPoint{p};
  } else if (family == "normal") {
    model = NormalSteps{r.real("model", "mean"), r.positive("model", "var")};
  } else if (family == "levy") {
    LevyModel m;
    m.driftMu = r.real("model", "mu");
    m.sigma = r.positive("model", "sigma");
    m.posRate = r.real("model", "r");
    m.posJumpRate = r.positive("model", "alpha");
    m.negRate = r.real("model", "s");
    m.negJumpRate = r.positive("model", "beta");
    if (m.posRate < 0.0) throw ConfigError("model.r", "must be non-negative");
    if (m.negRate < 0.0) throw ConfigError("model.s", "must be non-negative");
    model = m;
  } else if (family == "brownian") {
    model = LevyModel::brownian(r.real("model", "mu"), r.positive("model", "sigma"));
  } else {
    throw ConfigError("model.family", "family '" + family + "' is not a passage model");
  }
  checked("model.family", [&] { validate(model); });
  try {
    (void)CumulantProfile(model);
  } catch (const NoCramerRoot& e) {
    throw ConfigError(cramerKey(family),
                      "violates the Cramér condition (negative mean and a positive "
                      "root of psi are required): " +
                          std::string(e.what()));
  }
  return model;
}

QueueConfig readQueue(const Reader& r) {
  QueueConfig q;
  q.arrivalRate = r.positive("model", "arrival-rate");
  q.serviceRate = r.positive("model", "service-rate");
  q.capacity = static_cast<int>(r.count("model", "capacity"));
  q.absorbThreshold = static_cast<int>(r.integer("model", "absorb-threshold"));
  q.rewardB = r.real("model", "reward-b");
  q.rewardBase = r.positive("model", "reward-base");
  q.xRef = static_cast<int>(r.integer("model", "x-ref"));
  q.thetaThreshold = r.real("model", "theta-threshold");
  if (!(q.load() < 1.0))
    throw ConfigError("model.arrival-rate", "load arrival-rate / service-rate must be below 1");
  checked("model.capacity", [&] { validate(q); });
  return q;
}

SimConfig readSim(const Reader& r, const ConfigDocument& doc, unsigned workers) {
  SimConfig cfg;
  cfg.masterSeed = r.unsignedInt("experiment", "seed");
  cfg.workers = workers;
  if (doc.has("study", "dt")) cfg.dt = r.positive("study", "dt");
  if (doc.has("study", "bridge")) cfg.bridgeCorrection = r.flag("study", "bridge");
  if (doc.has("study", "max-events")) cfg.maxEvents = r.unsignedInt("study", "max-events");
  checked("study.dt", [&] { validate(cfg); });
  return cfg;
}

std::size_t readReps(const Reader& r) {
  return static_cast<std::size_t>(r.count("experiment", "reps"));
}

RestartMeasure readMeasure(const Reader& r, double x) {
  const std::string kind = r.str("study", "measure");
  RestartMeasure m;
  if (kind == "truncated-exponential")
    m = TruncatedExponential{r.positive("study", "measure-rate"), x};
  else if (kind == "brownian-qsd")
    m = BrownianQsd{r.positive("study", "measure-mu"), x};
  else
    throw ConfigError("study.measure",
                      "expected truncated-exponential or brownian-qsd, got '" + kind + "'");
  checked("study.measure", [&] { validate(m); });
  return m;
}

std::uint64_t studySalt(const std::string& kind, std::size_t index) {
  return experimentId(experimentId(kind), static_cast<std::uint64_t>(index));
}

// ---------------------------------------------------------------- runners

ResultTable runCumulant(const Reader& r, const std::string& family) {
  const Model model = readModel(r);
  const CumulantProfile prof(model);
  const auto slopes = r.reals("study", "budget-slopes");
  ResultTable t({"model", "lambdaStar", "lambdaZero", "lambdaMax", "psiAtLambdaZero",
                 "psiPrimeAtZero", "psiPrimeAtStar", "psiSecondAtStar", "budgetSlope",
                 "lambdaBudget", "thresholdN", "nStar"});
  for (double c : slopes) {
    if (!(c > 0.0)) throw ConfigError("study.budget-slopes", "slopes must be positive");
    double lambdaBudget = std::numeric_limits<double>::quiet_NaN();
    try {
      lambdaBudget = solveLambdaForDrift(prof, 1.0 / c);
    } catch (const DriftOutOfRange&) {
    }
    t.addRow({family, prof.lambdaStar(), prof.lambdaZero(), prof.lambdaMax(),
              prof.psi(prof.lambdaZero()), prof.psiPrime(0.0), prof.psiPrimeAtStar(),
              prof.psiSecond(prof.lambdaStar()), c, lambdaBudget,
              particleThreshold(prof, c),
              static_cast<std::int64_t>(optimalParticles(prof, c))});
  }
  t.setMetadata("model", describe(model));
  return t;
}

ResultTable runParallel(const Reader& r, const ConfigDocument& doc, unsigned workers) {
  ParallelSpec spec;
  spec.model = readModel(r);
  spec.budgetSlope = r.positive("study", "budget-slope");
  spec.barriers = r.reals("study", "barriers");
  spec.particleGrid = r.ints("study", "particles");
  spec.reps = readReps(r);
  spec.tiltAtLambdaStar = r.flag("study", "tilt");
  checked("study.barriers", [&] { validate(spec); });
  const SimConfig cfg = readSim(r, doc, workers);
  return sweepPhaseTransition(spec, cfg);
}

struct RestartPlan {
  Model model;
  double x = 0.0;
  RestartMeasure measure;
  std::vector<double> horizons;
  std::size_t reps = 0;
  SimConfig cfg;
};

RestartPlan planRestartRun(const Reader& r, const ConfigDocument& doc, unsigned workers) {
  RestartPlan p;
  p.model = readModel(r);
  p.x = r.positive("study", "barrier");
  p.measure = readMeasure(r, p.x);
  p.horizons = r.reals("study", "horizons");
  for (double h : p.horizons)
    if (!(h > 0.0)) throw ConfigError("study.horizons", "horizons must be positive");
  p.reps = readReps(r);
  p.cfg = readSim(r, doc, workers);
  return p;
}

ResultTable runRestart(const RestartPlan& p) {
  ResultTable t({"horizon", "reps", "successes", "probability", "ci", "meanCycles",
                 "meanFailedCycle"});
  for (std::size_t i = 0; i < p.horizons.size(); ++i) {
    const auto runs = simulateRestartedRuns(p.model, p.measure, p.horizons[i], p.reps,
                                            p.cfg, studySalt("restart-run", i));
    std::size_t successes = 0;
    std::vector<double> cycles, failed;
    for (const auto& run : runs) {
      successes += run.success ? 1 : 0;
      cycles.push_back(static_cast<double>(run.cycleCount));
      if (run.meanFailedCycle > 0.0) failed.push_back(run.meanFailedCycle);
    }
    const stats::Proportion prop{successes, runs.size()};
    t.addRow({p.horizons[i], static_cast<std::int64_t>(runs.size()),
              static_cast<std::int64_t>(successes), prop.estimate(), prop.halfWidth95(),
              stats::summarize(cycles).mean,
              failed.empty() ? 0.0 : stats::summarize(failed).mean});
  }
  t.setMetadata("model", describe(p.model));
  t.setMetadata("barrier", formatNumber(p.x));
  return t;
}

ResultTable runGain(const Reader& r, const ConfigDocument& doc, unsigned workers) {
  const Model model = readModel(r);
  const auto barriers = r.reals("study", "barriers");
  const double slope = r.positive("study", "budget-slope");
  const std::size_t reps = readReps(r);
  std::vector<RestartMeasure> measures;
  for (double x : barriers) {
    if (!(x > 0.0)) throw ConfigError("study.barriers", "barriers must be positive");
    measures.push_back(readMeasure(r, x));
  }
  const SimConfig cfg = readSim(r, doc, workers);
  ResultTable t({"x", "budget", "gain", "ci", "restartSuccess", "directProbability", "qHat",
                 "betaHat", "expMoment", "analyticPrediction", "meanFailedCycle",
                 "meanSuccessCycle"});
  for (std::size_t i = 0; i < barriers.size(); ++i) {
    const GainReport g = restartGainReport(model, measures[i], slope * barriers[i], reps,
                                           cfg, studySalt("restart-gain", i));
    t.addRow({g.x, g.budget, g.gain, g.ciHalfWidth, g.restartSuccess, g.directProbability,
              g.qHat, g.betaHat, g.expMoment, g.analyticPrediction, g.meanFailedCycle,
              g.meanSuccessCycle});
  }
  t.setMetadata("model", describe(model));
  return t;
}

ResultTable runFv(const Reader& r, const ConfigDocument& doc, unsigned workers) {
  const std::string family = r.str("model", "family");
  const auto particles = r.ints("study", "particles");
  for (int n : particles)
    if (n < 2) throw ConfigError("study.particles", "particle counts must be at least 2");
  const std::size_t reps = readReps(r);
  if (family == "birth-death") {
    DiscreteCurveSpec spec;
    const auto n = r.count("model", "states");
    const double up = r.real("model", "p-up");
    const double down = r.real("model", "p-down");
    if (up < 0.0 || down < 0.0 || up + down > 1.0)
      throw ConfigError("model.p-up", "p-up and p-down must be non-negative with sum <= 1");
    spec.kernel = checked("model.states",
                          [&] { return oracle::birthDeathKernel(static_cast<int>(n), up, down); });
    spec.particleGrid = particles;
    spec.sampleSteps = static_cast<std::size_t>(r.count("study", "sample-steps"));
    spec.seeds = reps;
    spec.timeAverage = r.flag("study", "time-average");
    auto t = discreteConvergenceCurve(spec, r.unsignedInt("experiment", "seed"), workers);
    t.setMetadata("model", "birth-death");
    return t;
  }
  if (family != "brownian")
    throw ConfigError("model.family", "fv-converge takes birth-death or brownian");
  BrownianCurveSpec spec;
  spec.mu = r.positive("model", "mu");
  if (r.real("model", "sigma") != 1.0)
    throw ConfigError("model.sigma", "the QSD reference density assumes sigma = 1");
  spec.x = r.positive("study", "barrier");
  spec.particleGrid = particles;
  spec.sampleDuration = r.positive("study", "duration");
  spec.snapshotEvery = r.positive("study", "snapshot-every");
  spec.bins = static_cast<std::size_t>(r.count("study", "bins"));
  spec.seeds = reps;
  const SimConfig cfg = readSim(r, doc, workers);
  auto t = brownianConvergenceCurve(spec, cfg);
  t.setMetadata("model", describe(LevyModel::brownian(spec.mu)));
  return t;
}

ResultTable runAppendix1(const Reader& r, unsigned workers) {
  const QueueConfig q = readQueue(r);
  const auto states = r.ints("study", "states");
  for (int k : states)
    if (k < 1 || k > q.capacity)
      throw ConfigError("study.states", "states must lie in 1..capacity");
  const double slope = r.positive("study", "budget-slope");
  const double c = r.positive("study", "surrogate-c");
  const std::size_t reps = readReps(r);
  const auto seed = r.unsignedInt("experiment", "seed");
  ResultTable t({"k", "budget", "estimate", "ci", "exact", "pHit", "varPi", "varXi", "ratio"});
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (int k : states) {
    const double budget = slope * k;
    const auto est = naivePiHat(q, k, budget, reps, seed, workers);
    VarianceLinkReport link{k, budget, c, nan, nan, 0.0, nan};
    try {
      link = varianceLinkCheck(q, k, budget, c, reps, seed, workers);
    } catch (const InsufficientSignal&) {
    }
    t.addRow({static_cast<std::int64_t>(k), budget, est.estimate, est.ci,
              stationaryPi(q, k), link.pHit, link.varPi, link.varXi, link.ratio});
  }
  return t;
}

ResultTable runAppendix3(const Reader& r, unsigned workers) {
  const QueueConfig q = readQueue(r);
  const int k = static_cast<int>(r.integer("study", "target"));
  if (k <= q.absorbThreshold || k > q.capacity)
    throw ConfigError("study.target", "target must lie in (absorb-threshold, capacity]");
  std::vector<std::uint64_t> budgets;
  for (double b : r.reals("study", "event-budgets")) {
    if (!(b >= 1.0) || b != std::floor(b))
      throw ConfigError("study.event-budgets", "budgets must be positive integers");
    budgets.push_back(static_cast<std::uint64_t>(b));
  }
  const auto methods = r.words("study", "methods");
  for (const auto& m : methods)
    if (m != "renewal" && m != "naive" && m != "fv")
      throw ConfigError("study.methods", "unknown method '" + m + "'");
  const double naiveSlope = r.positive("study", "naive-slope");
  const int fvParticles = static_cast<int>(r.count("study", "fv-particles"));
  const double share = r.positive("study", "return-share");
  if (share >= 1.0) throw ConfigError("study.return-share", "must lie in (0, 1)");
  const std::size_t seeds = readReps(r);
  const auto master = r.unsignedInt("experiment", "seed");

  std::vector<EstimatorReport> reports;
  std::vector<std::uint64_t> seedColumn;
  for (const auto& method : methods)
    for (auto budget : budgets)
      for (std::size_t i = 0; i < seeds; ++i) {
        const std::uint64_t seed = master + i;
        if (method == "renewal") {
          RenewalOptions o;
          o.totalEvents = budget;
          o.returnShare = share;
          o.workers = workers;
          reports.push_back(renewalEstimator(q, k, o, seed));
        } else if (method == "naive") {
          reports.push_back(naivePiHatWithEvents(q, k, naiveSlope * k, budget, seed));
        } else {
          FvQueueOptions o;
          o.particles = fvParticles;
          o.totalEvents = budget;
          reports.push_back(fvEstimator(q, k, o, seed));
        }
        seedColumn.push_back(seed);
      }
  ResultTable t = reportTable(reports, seedColumn);
  const auto exact = exactReport(q, k);
  t.addRow({exact.method, static_cast<std::int64_t>(k), exact.estimate, 0.0,
            std::int64_t{0}, std::string("-")});
  return t;
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

}  // namespace

const std::vector<std::string>& experimentKinds() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> out;
    for (const auto& s : schemas()) out.push_back(s.name);
    return out;
  }();
  return names;
}

std::vector<KeyDoc> documentedKeys(const std::string& kind) {
  const KindSchema& s = schemaNamed(kind);
  std::vector<KeyDoc> out;
  out.push_back({"experiment", "kind", kind, "experiment kind"});
  out.push_back({"experiment", "seed", std::to_string(kDefaultSeed),
                 "master seed (falls back to RARE_REACH_SEED)"});
  if (!s.reps.empty()) out.push_back({"experiment", "reps", s.reps, s.repsHelp});
  out.push_back({"experiment", "format", "csv", "csv or json"});
  std::string fams;
  for (const auto& f : s.families) fams += (fams.empty() ? "" : ", ") + f;
  out.push_back({"model", "family", s.families.front(), fams});
  for (const auto& fname : s.families)
    for (const auto& k : familyNamed(fname).keys)
      out.push_back({"model", k.key, k.value, "[" + fname + "] " + k.help});
  for (const auto& k : s.study) out.push_back({"study", k.key, k.value, k.help});
  return out;
}

ConfigDocument resolve(const ConfigDocument& doc, const Overrides& overrides) {
  for (const auto& section : doc.sections())
    if (section != "experiment" && section != "model" && section != "study")
      throw ConfigError(section, "unknown section [" + section +
                                     "] (expected experiment, model, study)");

  std::string kind;
  if (overrides.kind) {
    kind = *overrides.kind;
    if (doc.has("experiment", "kind") && doc.get("experiment", "kind") != kind)
      throw ConfigError("experiment.kind", "file declares '" + doc.get("experiment", "kind") +
                                               "' but the command is '" + kind + "'");
  } else {
    kind = doc.get("experiment", "kind");
  }
  const KindSchema& schema = schemaNamed(kind);

  for (const auto& key : doc.keys("experiment"))
    if (key != "kind" && key != "seed" && key != "format" && !(key == "reps" && !schema.reps.empty()))
      throw ConfigError("experiment." + key, "unknown key for kind " + kind);

  const std::string familyName = doc.getOr("model", "family", schema.families.front());
  if (std::find(schema.families.begin(), schema.families.end(), familyName) ==
      schema.families.end())
    throw ConfigError("model.family", "family '" + familyName + "' is not accepted by " + kind);
  const Family& family = familyNamed(familyName);
  for (const auto& key : doc.keys("model")) {
    if (key == "family") continue;
    const bool known = std::any_of(family.keys.begin(), family.keys.end(),
                                   [&](const Key& k) { return k.key == key; });
    if (!known) throw ConfigError("model." + key, "unknown key for family " + familyName);
  }
  for (const auto& key : doc.keys("study")) {
    const bool known = std::any_of(schema.study.begin(), schema.study.end(),
                                   [&](const Key& k) { return k.key == key; });
    if (!known) throw ConfigError("study." + key, "unknown key for kind " + kind);
  }

  ConfigDocument out;
  out.set("experiment", "kind", kind);
  std::uint64_t seed = kDefaultSeed;
  if (overrides.seed) {
    seed = *overrides.seed;
  } else if (doc.has("experiment", "seed")) {
    seed = parseUint("experiment.seed", doc.get("experiment", "seed"));
  } else if (const char* env = std::getenv(kSeedEnv); env && *env) {
    seed = parseUint(kSeedEnv, env);
  }
  out.set("experiment", "seed", std::to_string(seed));
  if (!schema.reps.empty()) out.set("experiment", "reps", doc.getOr("experiment", "reps", schema.reps));
  const std::string format =
      lower(overrides.format ? *overrides.format : doc.getOr("experiment", "format", "csv"));
  if (format != "csv" && format != "json")
    throw ConfigError("experiment.format", "expected csv or json, got '" + format + "'");
  out.set("experiment", "format", format);

  out.set("model", "family", familyName);
  for (const auto& k : family.keys) out.set("model", k.key, doc.getOr("model", k.key, k.value));
  for (const auto& k : schema.study) out.set("study", k.key, doc.getOr("study", k.key, k.value));

  // Parse everything now so that bad values fail before any simulation.
  const Reader r(out);
  if (!schema.reps.empty()) (void)readReps(r);
  if (familyName == "mm1k") {
    (void)readQueue(r);
  } else if (familyName != "birth-death") {
    (void)readModel(r);
  }
  if (kind == "parallel-sweep") {
    ParallelSpec spec;
    spec.model = readModel(r);
    spec.budgetSlope = r.positive("study", "budget-slope");
    spec.barriers = r.reals("study", "barriers");
    spec.particleGrid = r.ints("study", "particles");
    spec.reps = readReps(r);
    (void)r.flag("study", "tilt");
    checked("study.barriers", [&] { validate(spec); });
    (void)readSim(r, out, 1);
  } else if (kind == "restart-run") {
    (void)planRestartRun(r, out, 1);
  } else if (kind == "restart-gain") {
    (void)r.positive("study", "budget-slope");
    for (double x : r.reals("study", "barriers")) {
      if (!(x > 0.0)) throw ConfigError("study.barriers", "barriers must be positive");
      (void)readMeasure(r, x);
    }
    (void)readSim(r, out, 1);
  } else if (kind == "cumulant-report") {
    for (double c : r.reals("study", "budget-slopes"))
      if (!(c > 0.0)) throw ConfigError("study.budget-slopes", "slopes must be positive");
  } else if (kind == "fv-converge") {
    for (int n : r.ints("study", "particles"))
      if (n < 2) throw ConfigError("study.particles", "particle counts must be at least 2");
    (void)r.count("study", "sample-steps");
    (void)r.flag("study", "time-average");
    (void)r.positive("study", "barrier");
    (void)r.positive("study", "duration");
    (void)r.positive("study", "snapshot-every");
    (void)r.count("study", "bins");
    (void)readSim(r, out, 1);
  } else if (kind == "mm1-appendix1") {
    (void)r.ints("study", "states");
    (void)r.positive("study", "budget-slope");
    (void)r.positive("study", "surrogate-c");
  } else if (kind == "mm1k-appendix3") {
    (void)r.integer("study", "target");
    (void)r.reals("study", "event-budgets");
    (void)r.words("study", "methods");
    (void)r.positive("study", "naive-slope");
    (void)r.count("study", "fv-particles");
    (void)r.positive("study", "return-share");
  }
  return out;
}

ResultTable execute(const ConfigDocument& resolved, unsigned workers) {
  const Reader r(resolved);
  const std::string kind = r.str("experiment", "kind");
  const std::string family = r.str("model", "family");
  ResultTable t;
  if (kind == "cumulant-report")
    t = runCumulant(r, family);
  else if (kind == "parallel-sweep")
    t = runParallel(r, resolved, workers);
  else if (kind == "restart-run")
    t = runRestart(planRestartRun(r, resolved, workers));
  else if (kind == "restart-gain")
    t = runGain(r, resolved, workers);
  else if (kind == "fv-converge")
    t = runFv(r, resolved, workers);
  else if (kind == "mm1-appendix1")
    t = runAppendix1(r, workers);
  else if (kind == "mm1k-appendix3")
    t = runAppendix3(r, workers);
  else
    throw ConfigError("experiment.kind", "unknown kind '" + kind + "'");
  t.setMetadata("kind", kind);
  t.setMetadata("seed", r.str("experiment", "seed"));
  t.setMetadata("version", version());
  return t;
}

RunResult run(const ConfigDocument& doc, const Overrides& overrides, unsigned workers,
              const std::string& outDir) {
  RunResult result;
  result.resolved = resolve(doc, overrides);
  const auto start = std::chrono::steady_clock::now();
  result.table = execute(result.resolved, workers);
  result.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  namespace fs = std::filesystem;
  fs::create_directories(outDir);
  const std::string kind = result.resolved.get("experiment", "kind");
  const std::string format = result.resolved.get("experiment", "format");
  result.dataPath = (fs::path(outDir) / (kind + "." + format)).string();
  result.manifestPath = (fs::path(outDir) / "manifest.ini").string();
  {
    std::ofstream data(result.dataPath, std::ios::binary);
    if (!data) throw Error("cannot write '" + result.dataPath + "'");
    if (format == "json")
      result.table.writeJson(data);
    else
      result.table.writeCsv(data);
  }
  std::ofstream manifest(result.manifestPath, std::ios::binary);
  if (!manifest) throw Error("cannot write '" + result.manifestPath + "'");
  manifest << "# rare_reach " << version() << "\n"
           << "# wall-clock " << formatNumber(std::round(result.seconds * 1000.0) / 1000.0)
           << " s\n"
           << "# rerun: rare_reach run --config manifest.ini\n";
  result.resolved.write(manifest);
  return result;
}

const std::vector<Recipe>& recipes() {
  static const std::vector<Recipe> all = {
      {"fig1",
       "parallel exploration of the +-1 walk, p = 0.45, B(x) = 300 x",
       600.0,
       "[experiment]\nkind = parallel-sweep\nreps = 1000\n\n"
       "[model]\nfamily = two-point\np = 0.45\n\n"
       "[study]\nbudget-slope = 300\nbarriers = 100, 500, 2500\nparticles = 1..100\n"
       "tilt = true\n"},
      {"fig2",
       "parallel exploration of the exponential-jump Levy example, B(x) = 15 x",
       600.0,
       "[experiment]\nkind = parallel-sweep\nreps = 1000\n\n"
       "[model]\nfamily = levy\nmu = 1\nsigma = 1\nr = 2\nalpha = 4\ns = 3\nbeta = 1\n\n"
       "[study]\nbudget-slope = 15\nbarriers = 5, 10, 20\nparticles = 1..80\n"
       "tilt = true\ndt = 0.01\n"},
      {"fig3",
       "restarted Levy example on (0, 20) with truncated exponential restart, rate 0.1",
       300.0,
       "[experiment]\nkind = restart-run\nreps = 100\n\n"
       "[model]\nfamily = levy\nmu = 1\nsigma = 1\nr = 2\nalpha = 4\ns = 3\nbeta = 1\n\n"
       "[study]\nbarrier = 20\nmeasure = truncated-exponential\nmeasure-rate = 0.1\n"
       "horizons = 50, 300, 1500\ndt = 0.01\n"},
      {"fig4",
       "M/M/1/K with K = 40, J = 12: renewal estimates of pi(40) at 1e5, 1e6, 1e7 events",
       600.0,
       "[experiment]\nkind = mm1k-appendix3\nreps = 10\n\n"
       "[model]\nfamily = mm1k\narrival-rate = 0.7\nservice-rate = 1\ncapacity = 40\n"
       "absorb-threshold = 12\n\n"
       "[study]\ntarget = 40\nevent-budgets = 1e5, 1e6, 1e7\nmethods = renewal, naive\n"},
      {"appendix1",
       "M/M/1 naive estimator against the surrogate c 1(tau(k) < B(k))",
       120.0,
       "[experiment]\nkind = mm1-appendix1\nreps = 10000\n\n"
       "[model]\nfamily = mm1k\narrival-rate = 0.7\nservice-rate = 1\ncapacity = 40\n\n"
       "[study]\nstates = 4, 6, 8, 10, 12\nbudget-slope = 5\nsurrogate-c = 1\n"},
  };
  return all;
}

std::vector<std::string> listRecipes() {
  std::vector<std::string> names;
  for (const auto& r : recipes()) names.push_back(r.name);
  return names;
}

const Recipe& findRecipe(const std::string& name) {
  for (const auto& r : recipes())
    if (r.name == name) return r;
  throw ConfigError("", "unknown recipe '" + name + "'");
}

}  // namespace rare_reach::cli
