#include "rare_reach/paths.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "rare_reach/error.hpp"

namespace rare_reach {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

enum class Stop { Upper, Lower, Horizon };

struct Excursion {
  Stop stop = Stop::Horizon;
  double time = 0.0;
  double position = 0.0;
  std::uint64_t events = 0;
};

[[noreturn]] void capError(bool exitMode, std::uint64_t cap) {
  const std::string msg = "trajectory exceeded " + std::to_string(cap) +
                          " events; the configuration is runaway";
  if (exitMode) throw BudgetCapExceeded(msg);
  throw EventCapExceeded(msg);
}

// Runs a Levy path from z until it leaves (lower, upper) or time reaches
// horizon. lower may be -inf and horizon +inf.
Excursion runLevy(const LevyModel& m, double z, double upper, double lower,
                  double horizon, const SimConfig& cfg, Stream& stream,
                  std::uint64_t cap, bool exitMode) {
  Excursion out;
  const double jumpRate = m.posRate + m.negRate;
  const double upShare = jumpRate > 0.0 ? m.posRate / jumpRate : 0.0;
  const double var = m.sigma * m.sigma;
  double t = 0.0;
  std::uint64_t events = 0;
  auto tick = [&] {
    if (++events > cap) capError(exitMode, cap);
  };
  for (;;) {
    const double nextJump = jumpRate > 0.0 ? t + stream.exponential(jumpRate) : kInf;
    const double segEnd = std::min(nextJump, horizon);
    const double drift = -m.driftMu;
    while (t < segEnd) {
      tick();
      const bool last = segEnd - t <= cfg.dt;
      const double h = last ? segEnd - t : cfg.dt;
      const double tEnd = last ? segEnd : t + h;
      const double a = z;
      const double b = a + drift * h + m.sigma * std::sqrt(h) * stream.normal();
      bool crossUp = b >= upper;
      bool crossDown = !crossUp && b <= lower;
      if (!crossUp && !crossDown && cfg.bridgeCorrection) {
        if (std::isfinite(upper)) {
          const double pUp = std::exp(-2.0 * (upper - a) * (upper - b) / (var * h));
          crossUp = stream.uniform() < pUp;
        }
        if (!crossUp && std::isfinite(lower)) {
          const double pDown = std::exp(-2.0 * (a - lower) * (b - lower) / (var * h));
          crossDown = stream.uniform() < pDown;
        }
      }
      if (crossUp || crossDown) {
        out.stop = crossUp ? Stop::Upper : Stop::Lower;
        out.time = tEnd;
        out.position = crossUp ? upper : lower;
        out.events = events;
        return out;
      }
      z = b;
      t = tEnd;
    }
    if (segEnd >= horizon) {
      out.stop = Stop::Horizon;
      out.time = horizon;
      out.position = z;
      out.events = events;
      return out;
    }
    tick();
    if (stream.uniform() < upShare)
      z += stream.exponential(m.posJumpRate);
    else
      z -= stream.exponential(m.negJumpRate);
    if (z >= upper || z <= lower) {
      out.stop = z >= upper ? Stop::Upper : Stop::Lower;
      out.time = t;
      out.position = z;
      out.events = events;
      return out;
    }
  }
}

// Draws an increment of a walk.
struct WalkStepper {
  explicit WalkStepper(const IncrementLaw& law) {
    if (const auto* tp = std::get_if<TwoPoint>(&law)) {
      // P(draw < threshold) = p for a uniform 64-bit draw.
      const long double scaled = static_cast<long double>(tp->p) * 18446744073709551616.0L;
      threshold = scaled >= 18446744073709551615.0L
                      ? std::numeric_limits<std::uint64_t>::max()
                      : static_cast<std::uint64_t>(scaled);
      lattice = true;
    } else {
      const auto& n = std::get<NormalSteps>(law);
      mean = n.meanStep;
      sd = std::sqrt(n.varStep);
    }
  }
  double operator()(Stream& s) const {
    if (lattice) return s() < threshold ? 1.0 : -1.0;
    return mean + sd * s.normal();
  }
  bool lattice = false;
  std::uint64_t threshold = 0;
  double mean = 0.0;
  double sd = 0.0;
};

IncrementLaw asIncrementLaw(const Model& model) {
  if (const auto* tp = std::get_if<TwoPoint>(&model)) return *tp;
  return std::get<NormalSteps>(model);
}

}  // namespace

void validate(const SimConfig& cfg) {
  if (!(cfg.dt > 0.0) || !std::isfinite(cfg.dt))
    throw InvalidArgument("SimConfig: dt must be > 0");
  if (cfg.maxEvents < 1) throw InvalidArgument("SimConfig: maxEvents must be >= 1");
}

PassageOutcome simulateWalkPassage(const IncrementLaw& law, double x,
                                   std::int64_t budget, Stream& stream) {
  if (!(x > 0.0)) throw InvalidArgument("simulateWalkPassage: barrier must be > 0");
  std::visit([](const auto& l) { validate(Model(l)); }, law);
  const WalkStepper step(law);
  PassageOutcome out;
  double z = 0.0;
  for (std::int64_t s = 1; s <= budget; ++s) {
    z += step(stream);
    if (z >= x) {
      out.hit = true;
      out.time = static_cast<double>(s);
      out.terminalPosition = z;
      out.overshoot = z - x;
      out.events = static_cast<std::uint64_t>(s);
      return out;
    }
  }
  out.time = static_cast<double>(std::max<std::int64_t>(budget, 0));
  out.terminalPosition = z;
  out.events = static_cast<std::uint64_t>(std::max<std::int64_t>(budget, 0));
  return out;
}

PassageOutcome simulateLevyPassage(const LevyModel& model, double x,
                                   double budget, const SimConfig& cfg,
                                   Stream& stream) {
  if (!(x > 0.0)) throw InvalidArgument("simulateLevyPassage: barrier must be > 0");
  validate(Model(model));
  validate(cfg);
  PassageOutcome out;
  if (!(budget > 0.0)) return out;
  const Excursion e = runLevy(model, 0.0, x, -kInf, budget, cfg, stream,
                              cfg.maxEvents, false);
  out.hit = e.stop == Stop::Upper;
  out.time = e.time;
  out.terminalPosition = e.position;
  out.overshoot = out.hit ? e.position - x : 0.0;
  out.events = e.events;
  return out;
}

PassageOutcome simulatePassage(const Model& model, double x, double budget,
                               const SimConfig& cfg, Stream& stream) {
  if (const auto* m = std::get_if<LevyModel>(&model))
    return simulateLevyPassage(*m, x, budget, cfg, stream);
  const double steps = std::floor(budget);
  if (steps > static_cast<double>(cfg.maxEvents))
    throw EventCapExceeded("walk budget " + std::to_string(steps) +
                           " exceeds maxEvents");
  return simulateWalkPassage(asIncrementLaw(model), x,
                             static_cast<std::int64_t>(std::max(0.0, steps)), stream);
}

ExitOutcome simulateExit(const Model& model, double y0, double x,
                         const SimConfig& cfg, Stream& stream,
                         std::uint64_t budgetCap) {
  if (!(y0 > 0.0 && y0 < x))
    throw InvalidArgument("simulateExit: need 0 < y0 < x");
  validate(model);
  ExitOutcome out;
  if (const auto* m = std::get_if<LevyModel>(&model)) {
    validate(cfg);
    const Excursion e = runLevy(*m, y0, x, 0.0, kInf, cfg, stream, budgetCap, true);
    out.side = e.stop == Stop::Upper ? ExitSide::Upper : ExitSide::Lower;
    out.time = e.time;
    out.terminalPosition = e.position;
    out.events = e.events;
    return out;
  }
  const WalkStepper step(asIncrementLaw(model));
  double z = y0;
  for (std::uint64_t s = 1; s <= budgetCap; ++s) {
    z += step(stream);
    if (z >= x || z <= 0.0) {
      out.side = z >= x ? ExitSide::Upper : ExitSide::Lower;
      out.time = static_cast<double>(s);
      out.terminalPosition = z;
      out.events = s;
      return out;
    }
  }
  capError(true, budgetCap);
}

double passageWeight(const PassageOutcome& outcome, double lambda,
                     double psiAtLambda) {
  if (lambda == 0.0) return 1.0;
  return std::exp(-lambda * outcome.terminalPosition + outcome.time * psiAtLambda);
}

PassageOutcome simulateTiltedPassage(const Model& model, double lambda,
                                     double x, double budget,
                                     const SimConfig& cfg, Stream& stream) {
  const Model tilted = tilt(model, lambda);
  PassageOutcome out = simulatePassage(tilted, x, budget, cfg, stream);
  if (lambda != 0.0)
    out.logWeight = -lambda * out.terminalPosition + out.time * psi(model, lambda);
  return out;
}

}  // namespace rare_reach
