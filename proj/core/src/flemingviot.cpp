#include "rare_reach/flemingviot.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "rare_reach/error.hpp"
#include "rare_reach/oracle.hpp"
#include "rare_reach/stats.hpp"
#include "rare_reach/workers.hpp"

namespace rare_reach {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void addCurveRow(ResultTable& table, int n, const std::vector<double>& tv) {
  const auto [lo, hi] = std::minmax_element(tv.begin(), tv.end());
  table.addRow({static_cast<std::int64_t>(n), stats::summarize(tv).mean, *lo, *hi,
                static_cast<std::int64_t>(tv.size())});
}

}  // namespace

DiscreteFv::DiscreteFv(std::vector<std::vector<double>> kernel,
                       std::vector<int> initial, Stream stream)
    : positions_(std::move(initial)), stream_(std::move(stream)) {
  const std::size_t n = kernel.size();
  if (n == 0) throw InvalidArgument("DiscreteFv: empty kernel");
  if (positions_.size() < 2) throw InvalidArgument("DiscreteFv: need N >= 2 particles");
  kernel_.resize(n);
  survival_.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (kernel[i].size() != n) throw InvalidArgument("DiscreteFv: kernel not square");
    double acc = 0.0;
    kernel_[i].resize(n);
    for (std::size_t j = 0; j < n; ++j) {
      if (kernel[i][j] < 0.0) throw InvalidArgument("DiscreteFv: negative entry");
      acc += kernel[i][j];
      kernel_[i][j] = acc;
    }
    if (acc > 1.0 + 1e-12) throw InvalidArgument("DiscreteFv: row sum exceeds 1");
    survival_[i] = acc;
  }
  for (int p : positions_)
    if (p < 0 || static_cast<std::size_t>(p) >= n)
      throw InvalidArgument("DiscreteFv: initial state out of range");
  occupation_.assign(n, 0.0);
}

void DiscreteFv::step() {
  const std::size_t count = positions_.size();
  std::vector<std::size_t> killed;
  std::vector<std::size_t> survivors;
  survivors.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const auto& row = kernel_[static_cast<std::size_t>(positions_[i])];
    const double u = stream_.uniform();
    if (u >= survival_[static_cast<std::size_t>(positions_[i])]) {
      killed.push_back(i);
      continue;
    }
    const auto it = std::upper_bound(row.begin(), row.end(), u);
    positions_[i] = static_cast<int>(std::min<std::size_t>(
        static_cast<std::size_t>(it - row.begin()), row.size() - 1));
    survivors.push_back(i);
  }
  if (survivors.empty())
    throw ExtinctionError("DiscreteFv: all particles absorbed in the same step");
  for (std::size_t i : killed)
    positions_[i] = positions_[survivors[stream_.below(survivors.size())]];
  absorptions_ += killed.size();
  ++steps_;
  for (int p : positions_) occupation_[static_cast<std::size_t>(p)] += 1.0;
  ++occupationSteps_;
}

void DiscreteFv::run(std::size_t steps) {
  for (std::size_t s = 0; s < steps; ++s) step();
}

void DiscreteFv::burnIn(double factor, std::size_t minSteps) {
  const std::uint64_t start = steps_;
  const std::uint64_t absorbed0 = absorptions_;
  const std::uint64_t hardCap = static_cast<std::uint64_t>(minSteps) * 1000 + 1000;
  for (;;) {
    run(100);
    const double elapsed = static_cast<double>(steps_ - start);
    const double absorbed = static_cast<double>(absorptions_ - absorbed0);
    if (elapsed < static_cast<double>(minSteps)) continue;
    if (absorbed > 0.0) {
      const double meanLife = elapsed * static_cast<double>(positions_.size()) / absorbed;
      if (elapsed >= factor * meanLife) break;
    }
    if (steps_ - start >= hardCap) break;
  }
  resetOccupation();
}

std::vector<double> DiscreteFv::empiricalDistribution() const {
  std::vector<double> freq(kernel_.size(), 0.0);
  for (int p : positions_) freq[static_cast<std::size_t>(p)] += 1.0;
  for (double& f : freq) f /= static_cast<double>(positions_.size());
  return freq;
}

std::vector<double> DiscreteFv::occupationDistribution() const {
  if (occupationSteps_ == 0) return empiricalDistribution();
  std::vector<double> freq = occupation_;
  const double total =
      static_cast<double>(occupationSteps_) * static_cast<double>(positions_.size());
  for (double& f : freq) f /= total;
  return freq;
}

void DiscreteFv::resetOccupation() {
  std::fill(occupation_.begin(), occupation_.end(), 0.0);
  occupationSteps_ = 0;
}

IntervalFv::IntervalFv(LevyModel model, double x, std::vector<double> initial,
                       SimConfig cfg, Stream stream)
    : model_(model), x_(x), cfg_(cfg), stream_(std::move(stream)),
      positions_(std::move(initial)) {
  validate(Model(model_));
  validate(cfg_);
  if (!(x_ > 0.0)) throw InvalidArgument("IntervalFv: need x > 0");
  if (positions_.size() < 2) throw InvalidArgument("IntervalFv: need N >= 2 particles");
  for (double p : positions_)
    if (!(p > 0.0 && p < x_)) throw InvalidArgument("IntervalFv: initial position outside (0, x)");
  const double rate = model_.posRate + model_.negRate;
  nextJump_.resize(positions_.size());
  for (double& t : nextJump_) t = rate > 0.0 ? stream_.exponential(rate) : kInf;
}

bool IntervalFv::advance(std::size_t i, double h) {
  const double rate = model_.posRate + model_.negRate;
  const double upShare = rate > 0.0 ? model_.posRate / rate : 0.0;
  const double var = model_.sigma * model_.sigma;
  const double end = time_ + h;
  double t = time_;
  double z = positions_[i];
  for (;;) {
    const double segEnd = std::min(nextJump_[i], end);
    const double span = segEnd - t;
    if (span > 0.0) {
      const double a = z;
      const double b = a - model_.driftMu * span + model_.sigma * std::sqrt(span) * stream_.normal();
      if (b >= x_ || b <= 0.0) return true;
      if (cfg_.bridgeCorrection) {
        if (stream_.uniform() < std::exp(-2.0 * (x_ - a) * (x_ - b) / (var * span))) return true;
        if (stream_.uniform() < std::exp(-2.0 * a * b / (var * span))) return true;
      }
      z = b;
    }
    t = segEnd;
    if (nextJump_[i] > end) break;
    if (stream_.uniform() < upShare)
      z += stream_.exponential(model_.posJumpRate);
    else
      z -= stream_.exponential(model_.negJumpRate);
    nextJump_[i] = t + stream_.exponential(rate);
    if (z >= x_ || z <= 0.0) return true;
  }
  positions_[i] = z;
  return false;
}

void IntervalFv::step() {
  const double h = cfg_.dt;
  const std::size_t count = positions_.size();
  std::vector<std::size_t> killed;
  std::vector<std::size_t> survivors;
  survivors.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    if (advance(i, h))
      killed.push_back(i);
    else
      survivors.push_back(i);
  }
  if (survivors.empty())
    throw ExtinctionError("IntervalFv: all particles absorbed in the same sub-step");
  time_ += h;
  const double rate = model_.posRate + model_.negRate;
  for (std::size_t i : killed) {
    positions_[i] = positions_[survivors[stream_.below(survivors.size())]];
    nextJump_[i] = rate > 0.0 ? time_ + stream_.exponential(rate) : kInf;
  }
  absorptions_ += killed.size();
}

void IntervalFv::run(double duration) {
  const auto steps = static_cast<std::uint64_t>(std::ceil(duration / cfg_.dt - 1e-9));
  for (std::uint64_t s = 0; s < steps; ++s) step();
}

void IntervalFv::burnIn(double factor, double minDuration) {
  const double start = time_;
  const std::uint64_t absorbed0 = absorptions_;
  const double chunk = std::max(cfg_.dt, 0.5);
  for (;;) {
    run(chunk);
    const double elapsed = time_ - start;
    const double absorbed = static_cast<double>(absorptions_ - absorbed0);
    if (elapsed < minDuration) continue;
    if (absorbed > 0.0) {
      const double meanLife = elapsed * static_cast<double>(positions_.size()) / absorbed;
      if (elapsed >= factor * meanLife) break;
    }
    if (elapsed >= 1000.0 * minDuration) break;
  }
}

Empirical IntervalFv::empiricalMeasure() const { return Empirical{positions_, x_}; }

void IntervalFv::recordSnapshot() {
  pooled_.insert(pooled_.end(), positions_.begin(), positions_.end());
}

ResultTable IntervalFv::snapshotTable() const {
  ResultTable table({"time", "particle", "position"});
  for (std::size_t i = 0; i < positions_.size(); ++i)
    table.addRow({time_, static_cast<std::int64_t>(i), positions_[i]});
  return table;
}

double brownianQsdTv(const std::vector<double>& samples, double mu, double x,
                     std::size_t bins) {
  const std::vector<double> observed = stats::histogram(samples, 0.0, x, bins);
  std::vector<double> expected(bins);
  for (std::size_t b = 0; b < bins; ++b) {
    const double lo = x * static_cast<double>(b) / static_cast<double>(bins);
    const double hi = x * static_cast<double>(b + 1) / static_cast<double>(bins);
    expected[b] = oracle::brownianQsdCdf(mu, x, hi) - oracle::brownianQsdCdf(mu, x, lo);
  }
  return stats::totalVariation(observed, expected);
}

std::vector<double> discreteTvBySeed(const DiscreteCurveSpec& spec, int particles,
                                     std::uint64_t masterSeed, unsigned workers) {
  const oracle::QsdResult qsd = oracle::qsdEigen(spec.kernel);
  const std::size_t states = spec.kernel.size();
  const StreamFamily family(
      masterSeed, experimentId(experimentId("fv.discrete"), static_cast<std::uint64_t>(particles)));
  std::vector<double> tv(spec.seeds);
  parallelFor(spec.seeds, workers, [&](std::size_t s) {
    std::vector<int> initial(static_cast<std::size_t>(particles));
    for (std::size_t i = 0; i < initial.size(); ++i) initial[i] = static_cast<int>(i % states);
    DiscreteFv fv(spec.kernel, std::move(initial), family(s));
    fv.burnIn();
    fv.run(spec.sampleSteps);
    const auto measure =
        spec.timeAverage ? fv.occupationDistribution() : fv.empiricalDistribution();
    tv[s] = stats::totalVariation(measure, qsd.nu);
  });
  return tv;
}

ResultTable discreteConvergenceCurve(const DiscreteCurveSpec& spec,
                                     std::uint64_t masterSeed, unsigned workers) {
  if (spec.particleGrid.empty()) throw InvalidArgument("convergence curve: empty particle grid");
  ResultTable table({"N", "meanTv", "minTv", "maxTv", "seeds"});
  for (int n : spec.particleGrid) addCurveRow(table, n, discreteTvBySeed(spec, n, masterSeed, workers));
  table.setMetadata("domain", "discrete chain, " + std::to_string(spec.kernel.size()) + " states");
  return table;
}

std::vector<double> brownianTvBySeed(const BrownianCurveSpec& spec, int particles,
                                     const SimConfig& cfg) {
  const StreamFamily family(
      cfg.masterSeed,
      experimentId(experimentId("fv.brownian"), static_cast<std::uint64_t>(particles)));
  std::vector<double> tv(spec.seeds);
  parallelFor(spec.seeds, cfg.workers, [&](std::size_t s) {
    std::vector<double> initial(static_cast<std::size_t>(particles));
    for (std::size_t i = 0; i < initial.size(); ++i)
      initial[i] = spec.x * (static_cast<double>(i) + 0.5) / static_cast<double>(particles);
    IntervalFv fv(LevyModel::brownian(spec.mu), spec.x, std::move(initial), cfg, family(s));
    fv.burnIn();
    const auto snapshots =
        std::max<std::size_t>(1, static_cast<std::size_t>(spec.sampleDuration / spec.snapshotEvery));
    for (std::size_t k = 0; k < snapshots; ++k) {
      fv.run(spec.snapshotEvery);
      fv.recordSnapshot();
    }
    tv[s] = brownianQsdTv(fv.pooled(), spec.mu, spec.x, spec.bins);
  });
  return tv;
}

ResultTable brownianConvergenceCurve(const BrownianCurveSpec& spec, const SimConfig& cfg) {
  if (spec.particleGrid.empty()) throw InvalidArgument("convergence curve: empty particle grid");
  ResultTable table({"N", "meanTv", "minTv", "maxTv", "seeds"});
  for (int n : spec.particleGrid) addCurveRow(table, n, brownianTvBySeed(spec, n, cfg));
  table.setMetadata("domain", "Brownian motion on (0, " + formatNumber(spec.x) + ")");
  return table;
}

}  // namespace rare_reach
