#include "rare_reach/queueing.hpp"

#include <cmath>
#include <limits>

#include "rare_reach/cumulant.hpp"
#include "rare_reach/error.hpp"
#include "rare_reach/stats.hpp"
#include "rare_reach/workers.hpp"

namespace rare_reach {
namespace {

void requireState(const QueueConfig& cfg, int k, const char* who) {
  if (k < 0 || k > cfg.capacity)
    throw InvalidArgument(std::string(who) + ": state " + std::to_string(k) +
                          " outside 0.." + std::to_string(cfg.capacity));
}

struct Moments {
  double sum = 0.0;
  double sumSq = 0.0;
  std::uint64_t count = 0;

  void add(double v) {
    sum += v;
    sumSq += v * v;
    ++count;
  }
  void merge(const Moments& o) {
    sum += o.sum;
    sumSq += o.sumSq;
    count += o.count;
  }
  double mean() const { return count ? sum / static_cast<double>(count) : 0.0; }
  double variance() const {
    if (count < 2) return 0.0;
    const double n = static_cast<double>(count);
    return std::max(0.0, (sumSq - sum * sum / n) / (n - 1.0));
  }
  // Squared relative standard error of the mean.
  double relVar() const {
    const double m = mean();
    if (m == 0.0 || count == 0) return 0.0;
    return variance() / (static_cast<double>(count) * m * m);
  }
};

// Holding-rate and jump of the M/M/1/K chain at state s.
struct Chain {
  double lambda;
  double mu;
  int capacity;

  double rate(int s) const {
    return (s < capacity ? lambda : 0.0) + (s > 0 ? mu : 0.0);
  }
  // Returns +1 for an arrival, -1 for a departure.
  int jump(int s, Stream& stream) const {
    if (s == 0) return 1;
    if (s == capacity) return -1;
    return stream.uniform() * (lambda + mu) < lambda ? 1 : -1;
  }
};

Chain chainOf(const QueueConfig& cfg) {
  return Chain{cfg.arrivalRate, cfg.serviceRate, cfg.capacity};
}

// Time between successive entrances into `target` (from `from` = target-1,
// or from either side when from < 0) along one long path.
Moments cycleLengths(const QueueConfig& cfg, int target, int from,
                     std::uint64_t eventBudget, Stream& stream, std::uint64_t& events) {
  const Chain chain = chainOf(cfg);
  Moments m;
  int s = target;
  double t = 0.0;
  double lastEntry = 0.0;
  while (events < eventBudget) {
    t += stream.exponential(chain.rate(s));
    const int prev = s;
    s += chain.jump(s, stream);
    ++events;
    if (s == target && (from < 0 || prev == from)) {
      m.add(t - lastEntry);
      lastEntry = t;
    }
  }
  return m;
}

}  // namespace

void validate(const QueueConfig& cfg) {
  if (!(cfg.arrivalRate > 0.0)) throw InvalidArgument("queue: arrivalRate must be > 0");
  if (!(cfg.serviceRate > 0.0)) throw InvalidArgument("queue: serviceRate must be > 0");
  if (!(cfg.load() < 1.0)) throw InvalidArgument("queue: load rho must be < 1");
  if (cfg.capacity < 1) throw InvalidArgument("queue: capacity must be >= 1");
  if (cfg.absorbThreshold < 0 || cfg.absorbThreshold >= cfg.capacity)
    throw InvalidArgument("queue: need 0 <= J < K");
  if (!(cfg.rewardB > 0.0)) throw InvalidArgument("queue: rewardB must be > 0");
  if (!(cfg.rewardBase > 1.0)) throw InvalidArgument("queue: rewardBase must be > 1");
}

double blockingReward(const QueueConfig& cfg, int x) {
  return cfg.rewardB * (1.0 + std::pow(cfg.rewardBase, x - cfg.xRef));
}

double stationaryPi(const QueueConfig& cfg, int k) {
  validate(cfg);
  requireState(cfg, k, "stationaryPi");
  const double rho = cfg.load();
  const double logRho = std::log(rho);
  // (1 - rho) rho^k / (1 - rho^{K+1}) with expm1 for the normalizer.
  return -std::expm1(logRho) * std::exp(k * logRho) /
         -std::expm1((cfg.capacity + 1) * logRho);
}

QueueRun simulateQueue(const QueueConfig& cfg, int initialState, double horizon,
                       Stream& stream) {
  validate(cfg);
  requireState(cfg, initialState, "simulateQueue");
  if (!(horizon > 0.0)) throw InvalidArgument("simulateQueue: horizon must be > 0");
  const Chain chain = chainOf(cfg);
  QueueRun run;
  const auto states = static_cast<std::size_t>(cfg.capacity) + 1;
  run.occupation.assign(states, 0.0);
  run.firstHit.assign(states, std::numeric_limits<double>::quiet_NaN());
  int s = initialState;
  double t = 0.0;
  run.firstHit[static_cast<std::size_t>(s)] = 0.0;
  for (;;) {
    const double hold = stream.exponential(chain.rate(s));
    if (t + hold >= horizon) {
      run.occupation[static_cast<std::size_t>(s)] += horizon - t;
      t = horizon;
      break;
    }
    run.occupation[static_cast<std::size_t>(s)] += hold;
    t += hold;
    const int step = chain.jump(s, stream);
    if (step > 0)
      ++run.arrivals;
    else
      ++run.departures;
    s += step;
    if (std::isnan(run.firstHit[static_cast<std::size_t>(s)]))
      run.firstHit[static_cast<std::size_t>(s)] = t;
  }
  run.time = t;
  run.finalState = s;
  return run;
}

EstimatorReport exactReport(const QueueConfig& cfg, int k) {
  EstimatorReport r;
  r.k = k;
  r.method = "exact";
  r.estimate = stationaryPi(cfg, k);
  return r;
}

EstimatorReport naivePiHat(const QueueConfig& cfg, int k, double budget,
                           std::size_t reps, std::uint64_t masterSeed, unsigned workers) {
  validate(cfg);
  requireState(cfg, k, "naivePiHat");
  if (!(budget > 0.0)) throw InvalidArgument("naivePiHat: budget must be > 0");
  if (reps < 1) throw InvalidArgument("naivePiHat: reps must be >= 1");
  const StreamFamily family(masterSeed, experimentId("queue.naive"));
  std::vector<double> est(reps);
  std::vector<std::uint64_t> events(reps);
  std::vector<unsigned char> hit(reps);
  parallelFor(reps, workers, [&](std::size_t r) {
    Stream stream = family(r);
    const QueueRun run = simulateQueue(cfg, 0, budget, stream);
    est[r] = run.occupation[static_cast<std::size_t>(k)] / budget;
    events[r] = run.events();
    hit[r] = !std::isnan(run.firstHit[static_cast<std::size_t>(k)]);
  });
  EstimatorReport rep;
  rep.k = k;
  rep.method = "naiveMC";
  const stats::Summary s = stats::summarize(est);
  rep.estimate = s.mean;
  rep.ci = s.halfWidth95();
  for (std::size_t r = 0; r < reps; ++r) {
    rep.eventsUsed += events[r];
    rep.hits += hit[r];
  }
  return rep;
}

EstimatorReport naivePiHatWithEvents(const QueueConfig& cfg, int k, double budget,
                                     std::uint64_t totalEvents, std::uint64_t masterSeed) {
  validate(cfg);
  requireState(cfg, k, "naivePiHat");
  if (!(budget > 0.0)) throw InvalidArgument("naivePiHat: budget must be > 0");
  const StreamFamily family(masterSeed, experimentId("queue.naive"));
  std::vector<double> est;
  EstimatorReport rep;
  rep.k = k;
  rep.method = "naiveMC";
  for (std::uint64_t r = 0; rep.eventsUsed < totalEvents; ++r) {
    Stream stream = family(r);
    const QueueRun run = simulateQueue(cfg, 0, budget, stream);
    est.push_back(run.occupation[static_cast<std::size_t>(k)] / budget);
    rep.eventsUsed += run.events();
    rep.hits += !std::isnan(run.firstHit[static_cast<std::size_t>(k)]);
  }
  const stats::Summary s = stats::summarize(est);
  rep.estimate = s.mean;
  rep.ci = s.halfWidth95();
  return rep;
}

VarianceLinkReport varianceLinkCheck(const QueueConfig& cfg, int k, double budget,
                                     double c, std::size_t reps,
                                     std::uint64_t masterSeed, unsigned workers) {
  validate(cfg);
  requireState(cfg, k, "varianceLinkCheck");
  if (!(c >= 0.0)) throw InvalidArgument("varianceLinkCheck: c must be >= 0");
  if (reps < 2) throw InvalidArgument("varianceLinkCheck: reps must be >= 2");
  const StreamFamily family(
      masterSeed, experimentId(experimentId("queue.variance-link"), static_cast<std::uint64_t>(k)));
  std::vector<double> piHat(reps), xi(reps);
  parallelFor(reps, workers, [&](std::size_t r) {
    Stream stream = family(r);
    const QueueRun run = simulateQueue(cfg, 0, budget, stream);
    piHat[r] = run.occupation[static_cast<std::size_t>(k)] / budget;
    const double first = run.firstHit[static_cast<std::size_t>(k)];
    xi[r] = !std::isnan(first) && first < budget ? 1.0 : 0.0;
  });
  VarianceLinkReport rep;
  rep.k = k;
  rep.budget = budget;
  rep.c = c;
  const stats::Summary hits = stats::summarize(xi);
  rep.pHit = hits.mean;
  if (!(rep.pHit > 0.0))
    throw InsufficientSignal("varianceLinkCheck: no run reached state " + std::to_string(k));
  rep.varPi = stats::summarize(piHat).variance;
  rep.varXi = c * c * hits.variance;
  rep.ratio = std::abs(rep.varPi - rep.varXi) / rep.pHit;
  return rep;
}

int queueParticleCount(const QueueConfig& cfg, int k, std::uint64_t eventBudget) {
  validate(cfg);
  const int distance = k - cfg.absorbThreshold;
  if (distance < 1) throw InvalidArgument("queueParticleCount: need k > J");
  const CumulantProfile profile(
      TwoPoint{cfg.arrivalRate / (cfg.arrivalRate + cfg.serviceRate)});
  return optimalParticles(profile,
                          static_cast<double>(eventBudget) / static_cast<double>(distance));
}

EstimatorReport renewalEstimator(const QueueConfig& cfg, int k,
                                 const RenewalOptions& options, std::uint64_t masterSeed) {
  validate(cfg);
  const int j = cfg.absorbThreshold;
  if (!(j > 0 && j < k && k <= cfg.capacity))
    throw InvalidArgument("renewalEstimator: need 0 < J < k <= K");
  if (!(options.returnShare > 0.0 && options.returnShare < 1.0))
    throw InvalidArgument("renewalEstimator: returnShare must be in (0, 1)");
  const auto returnBudget = static_cast<std::uint64_t>(
      std::ceil(options.returnShare * static_cast<double>(options.totalEvents)));
  const std::uint64_t hitBudget = options.totalEvents - std::min(options.totalEvents, returnBudget);
  const std::uint64_t replicas =
      options.parallel > 0
          ? options.parallel
          : static_cast<std::uint64_t>(queueParticleCount(cfg, k, hitBudget));
  const std::uint64_t perReplica = std::max<std::uint64_t>(1, hitBudget / replicas);

  EstimatorReport rep;
  rep.k = k;
  rep.method = "renewal";
  rep.particles = replicas;

  // (i) mean time between entrances to J.
  std::uint64_t returnEvents = 0;
  Stream returnStream(masterSeed, experimentId("queue.renewal.return"), 0);
  const Moments cycle = cycleLengths(cfg, j, -1, returnBudget, returnStream, returnEvents);
  rep.eventsUsed += returnEvents;
  if (cycle.count == 0) throw InsufficientSignal("renewalEstimator: no return to J observed");

  // (ii) time in k per cycle, from independent replicas.
  const Chain chain = chainOf(cfg);
  const double upShare = cfg.arrivalRate / (cfg.arrivalRate + cfg.serviceRate);
  const StreamFamily family(masterSeed, experimentId("queue.renewal.cycles"));
  std::vector<Moments> occ(replicas);
  std::vector<std::uint64_t> events(replicas, 0), hits(replicas, 0);
  parallelFor(replicas, options.workers, [&](std::size_t r) {
    Stream stream = family(r);
    while (events[r] < perReplica) {
      ++events[r];
      double y = 0.0;
      if (stream.uniform() < upShare) {
        int s = j + 1;
        bool reached = false;
        while (s != j) {
          if (s == k) {
            reached = true;
            y += stream.exponential(chain.rate(s));
          }
          s += chain.jump(s, stream);
          ++events[r];
        }
        hits[r] += reached;
      }
      occ[r].add(y);
    }
  });
  Moments total;
  for (std::uint64_t r = 0; r < replicas; ++r) {
    total.merge(occ[r]);
    rep.eventsUsed += events[r];
    rep.hits += hits[r];
  }
  if (rep.hits == 0) {
    rep.estimate = 0.0;
    return rep;
  }
  rep.estimate = total.mean() / cycle.mean();
  rep.ci = stats::kZ95 * rep.estimate * std::sqrt(total.relVar() + cycle.relVar());
  return rep;
}

EstimatorReport fvEstimator(const QueueConfig& cfg, int k, const FvQueueOptions& options,
                            std::uint64_t masterSeed) {
  validate(cfg);
  const int j = cfg.absorbThreshold;
  if (!(j > 0 && j <= k && k <= cfg.capacity))
    throw InvalidArgument("fvEstimator: need 0 < J <= k <= K");
  if (options.particles < 2) throw InvalidArgument("fvEstimator: need >= 2 particles");
  const auto cycleBudget = static_cast<std::uint64_t>(
      std::ceil(options.cycleShare * static_cast<double>(options.totalEvents)));
  const std::uint64_t fvBudget = options.totalEvents - std::min(options.totalEvents, cycleBudget);

  EstimatorReport rep;
  rep.k = k;
  rep.method = "fv";
  rep.particles = static_cast<std::uint64_t>(options.particles);

  std::uint64_t cycleEvents = 0;
  Stream cycleStream(masterSeed, experimentId("queue.fv.cycle"), 0);
  const Moments cycle = cycleLengths(cfg, j, j - 1, cycleBudget, cycleStream, cycleEvents);
  rep.eventsUsed += cycleEvents;
  if (cycle.count == 0) throw InsufficientSignal("fvEstimator: no entrance to J observed");

  // Uniformized dynamics: every particle rings at rate lambda + mu; at K the
  // arrival is lost.
  Stream stream(masterSeed, experimentId("queue.fv.particles"), 0);
  const auto n = static_cast<std::size_t>(options.particles);
  const double ring = cfg.arrivalRate + cfg.serviceRate;
  const double upShare = cfg.arrivalRate / ring;
  std::vector<int> pos(n, j);
  std::size_t atK = k == j ? n : 0;
  const double logKeep = std::log1p(-1.0 / static_cast<double>(n));
  double logSurvival = 0.0;
  double integral = 0.0;
  std::uint64_t fvEvents = 0;
  const double logFloor = std::log(options.survivalFloor);
  while (fvEvents < fvBudget && logSurvival > logFloor) {
    const double dt = stream.exponential(ring * static_cast<double>(n));
    integral += std::exp(logSurvival) * static_cast<double>(atK) / static_cast<double>(n) * dt;
    const std::size_t i = stream.below(n);
    ++fvEvents;
    const int before = pos[i];
    int after = before + (stream.uniform() < upShare ? 1 : -1);
    if (after > cfg.capacity) after = cfg.capacity;
    if (after < j) {
      std::size_t other = stream.below(n - 1);
      if (other >= i) ++other;
      after = pos[other];
      logSurvival += logKeep;
      ++rep.hits;
    }
    pos[i] = after;
    atK += (after == k) - (before == k);
  }
  rep.eventsUsed += fvEvents;
  rep.estimate = integral / cycle.mean();
  // Only the cycle-mean part of the error is available in closed form.
  rep.ci = stats::kZ95 * rep.estimate * std::sqrt(cycle.relVar());
  return rep;
}

double gradientAssembly(double pHatKm1, double qAccept, double qBlock) {
  if (!(pHatKm1 >= 0.0)) throw InvalidArgument("gradientAssembly: pHatKm1 must be >= 0");
  return pHatKm1 * (qAccept - qBlock);
}

ResultTable reportTable(const std::vector<EstimatorReport>& reports,
                        const std::vector<std::uint64_t>& seeds) {
  if (seeds.size() != reports.size())
    throw InvalidArgument("reportTable: one seed per report expected");
  ResultTable table({"method", "k", "estimate", "ci", "eventsUsed", "seeds"});
  for (std::size_t i = 0; i < reports.size(); ++i) {
    const auto& r = reports[i];
    table.addRow({r.method, static_cast<std::int64_t>(r.k), r.estimate, r.ci,
                  static_cast<std::int64_t>(r.eventsUsed), std::to_string(seeds[i])});
  }
  return table;
}

}  // namespace rare_reach
