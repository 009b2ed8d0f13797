#include "rare_reach/cumulant.hpp"

#include <cmath>
#include <functional>
#include <sstream>

#include "rare_reach/error.hpp"

namespace rare_reach {
namespace {

template <class... Fs>
struct Overloaded : Fs... {
  using Fs::operator()...;
};
template <class... Fs>
Overloaded(Fs...) -> Overloaded<Fs...>;

constexpr double kInf = std::numeric_limits<double>::infinity();

// Offset a with psi'(l) = tanh(l + a) for the two-point law.
double twoPointShift(const TwoPoint& law) {
  return 0.5 * (std::log(law.p) - std::log1p(-law.p));
}

void requireInDomain(const Model& model, double lambda) {
  const Interval d = psiDomain(model);
  if (!(lambda > d.lo + kDomainGuard && lambda < d.hi - kDomainGuard)) {
    std::ostringstream msg;
    msg << "lambda = " << lambda << " outside the finite domain (" << d.lo
        << ", " << d.hi << ") of " << describe(model);
    throw DomainError(msg.str());
  }
}

/// Root of an increasing function on [lo, hi] with f(lo) < 0 < f(hi):
/// Newton steps, falling back to bisection whenever Newton leaves the bracket
/// or fails to halve it.
double increasingRoot(const std::function<double(double)>& f,
                      const std::function<double(double)>& df, double lo,
                      double hi) {
  double x = 0.5 * (lo + hi);
  double prevWidth = hi - lo;
  for (int iter = 0; iter < 400; ++iter) {
    const double fx = f(x);
    if (fx == 0.0) return x;
    if (fx < 0.0)
      lo = x;
    else
      hi = x;
    const double slope = df(x);
    double next = x - fx / slope;
    const bool newtonOk = std::isfinite(next) && next > lo && next < hi &&
                          std::abs(next - x) < 0.5 * prevWidth;
    if (!newtonOk) next = 0.5 * (lo + hi);
    prevWidth = std::abs(next - x);
    if (prevWidth <= 4.0 * std::numeric_limits<double>::epsilon() *
                         std::max(1.0, std::abs(next)) ||
        hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() *
                       std::max(1.0, std::abs(lo))) {
      // Final polish with the last Newton step if it stayed inside.
      return next;
    }
    x = next;
  }
  throw ConvergenceError("root search did not converge");
}

/// Smallest upper bracket b in (start, hi) with g(b) > 0, scanning towards
/// the domain end. Returns NaN if none found.
double findPositiveUpper(const std::function<double(double)>& g, double start,
                         double hi) {
  if (std::isfinite(hi)) {
    const double edge = hi - kDomainGuard * std::max(1.0, std::abs(hi));
    // Approach the singular endpoint geometrically.
    double gap = 0.5 * (edge - start);
    double b = start + gap;
    for (int i = 0; i < 200 && b < edge; ++i) {
      if (g(b) > 0.0) return b;
      gap *= 0.5;
      b = edge - gap;
      if (gap < kDomainGuard) break;
    }
    return g(edge) > 0.0 ? edge : std::nan("");
  }
  double b = std::max(1.0, 2.0 * std::abs(start));
  for (int i = 0; i < 1100; ++i) {
    if (g(b) > 0.0) return b;
    b *= 2.0;
    if (!std::isfinite(b)) break;
  }
  return std::nan("");
}

/// Largest lower bracket a in (lo, start) with g(a) < 0.
double findNegativeLower(const std::function<double(double)>& g, double start,
                         double lo) {
  if (std::isfinite(lo)) {
    const double edge = lo + kDomainGuard * std::max(1.0, std::abs(lo));
    double gap = 0.5 * (start - edge);
    double a = start - gap;
    for (int i = 0; i < 200 && a > edge; ++i) {
      if (g(a) < 0.0) return a;
      gap *= 0.5;
      a = edge + gap;
      if (gap < kDomainGuard) break;
    }
    return g(edge) < 0.0 ? edge : std::nan("");
  }
  double a = -std::max(1.0, 2.0 * std::abs(start));
  for (int i = 0; i < 1100; ++i) {
    if (g(a) < 0.0) return a;
    a *= 2.0;
    if (!std::isfinite(a)) break;
  }
  return std::nan("");
}

/// lambda with psi'(lambda) = s over the whole domain.
double invertPsiPrime(const Model& model, double s) {
  return std::visit(
      Overloaded{
          [&](const TwoPoint& law) -> double {
            if (!(std::abs(s) < 1.0))
              throw DriftOutOfRange("drift " + std::to_string(s) +
                                    " outside the range (-1, 1) of psi' for a "
                                    "+-1 walk");
            return std::atanh(s) - twoPointShift(law);
          },
          [&](const NormalSteps& law) -> double {
            return (s - law.meanStep) / law.varStep;
          },
          [&](const LevyModel&) -> double {
            const auto g = [&](double l) { return psiPrime(model, l) - s; };
            const auto dg = [&](double l) { return psiSecond(model, l); };
            const Interval d = psiDomain(model);
            const double g0 = g(0.0);
            if (g0 == 0.0) return 0.0;
            if (g0 < 0.0) {
              const double hi = findPositiveUpper(g, 0.0, d.hi);
              if (std::isnan(hi))
                throw DriftOutOfRange("drift above the range of psi'");
              return increasingRoot(g, dg, 0.0, hi);
            }
            const double lo = findNegativeLower(g, 0.0, d.lo);
            if (std::isnan(lo))
              throw DriftOutOfRange("drift below the range of psi'");
            return increasingRoot(g, dg, lo, 0.0);
          }},
      model);
}

}  // namespace

LevyModel LevyModel::brownian(double mu, double sigma) {
  LevyModel m;
  m.driftMu = mu;
  m.sigma = sigma;
  return m;
}

LevyModel LevyModel::exponentialJumpsExample() {
  LevyModel m;
  m.driftMu = 1.0;
  m.sigma = 1.0;
  m.posRate = 2.0;
  m.posJumpRate = 4.0;
  m.negRate = 3.0;
  m.negJumpRate = 1.0;
  return m;
}

void validate(const Model& model) {
  std::visit(
      Overloaded{
          [](const TwoPoint& law) {
            if (!(law.p > 0.0 && law.p < 1.0))
              throw InvalidArgument("two-point law needs 0 < p < 1, got p = " +
                                    std::to_string(law.p));
          },
          [](const NormalSteps& law) {
            if (!(law.varStep > 0.0) || !std::isfinite(law.meanStep))
              throw InvalidArgument("normal increments need varStep > 0");
          },
          [](const LevyModel& m) {
            if (!(m.sigma > 0.0))
              throw InvalidArgument(
                  "Levy model needs sigma > 0 (finite variation is excluded)");
            if (!(m.posRate >= 0.0) || !(m.negRate >= 0.0))
              throw InvalidArgument("Levy jump intensities must be >= 0");
            if (!(m.posJumpRate > 0.0) || !(m.negJumpRate > 0.0))
              throw InvalidArgument("Levy jump size rates must be > 0");
            if (!std::isfinite(m.driftMu))
              throw InvalidArgument("Levy drift must be finite");
          }},
      model);
}

bool isDiscreteTime(const Model& model) {
  return !std::holds_alternative<LevyModel>(model);
}

bool isBrownian(const Model& model) {
  const auto* m = std::get_if<LevyModel>(&model);
  return m != nullptr && !m->hasJumps();
}

std::string describe(const Model& model) {
  std::ostringstream out;
  std::visit(Overloaded{
                 [&](const TwoPoint& law) { out << "TwoPoint(p=" << law.p << ")"; },
                 [&](const NormalSteps& law) {
                   out << "Normal(mean=" << law.meanStep
                       << ", var=" << law.varStep << ")";
                 },
                 [&](const LevyModel& m) {
                   out << "Levy(mu=" << m.driftMu << ", sigma=" << m.sigma
                       << ", r=" << m.posRate << ", alpha=" << m.posJumpRate
                       << ", s=" << m.negRate << ", beta=" << m.negJumpRate
                       << ")";
                 }},
             model);
  return out.str();
}

Interval psiDomain(const Model& model) {
  if (const auto* m = std::get_if<LevyModel>(&model)) {
    Interval d;
    if (m->negRate > 0.0) d.lo = -m->negJumpRate;
    if (m->posRate > 0.0) d.hi = m->posJumpRate;
    return d;
  }
  return {};
}

double psi(const Model& model, double lambda) {
  requireInDomain(model, lambda);
  return std::visit(
      Overloaded{
          [&](const TwoPoint& law) {
            // Factor out the dominant exponential; exact zero at the origin.
            if (lambda >= 0.0)
              return lambda + std::log1p((1.0 - law.p) * std::expm1(-2.0 * lambda));
            return -lambda + std::log1p(law.p * std::expm1(2.0 * lambda));
          },
          [&](const NormalSteps& law) {
            return lambda * law.meanStep + 0.5 * law.varStep * lambda * lambda;
          },
          [&](const LevyModel& m) {
            double v = -m.driftMu * lambda +
                       0.5 * m.sigma * m.sigma * lambda * lambda;
            if (m.posRate > 0.0) v += m.posRate * lambda / (m.posJumpRate - lambda);
            if (m.negRate > 0.0) v -= m.negRate * lambda / (m.negJumpRate + lambda);
            return v;
          }},
      model);
}

double psiPrime(const Model& model, double lambda) {
  requireInDomain(model, lambda);
  return std::visit(
      Overloaded{
          [&](const TwoPoint& law) {
            return std::tanh(lambda + twoPointShift(law));
          },
          [&](const NormalSteps& law) {
            return law.meanStep + law.varStep * lambda;
          },
          [&](const LevyModel& m) {
            double v = -m.driftMu + m.sigma * m.sigma * lambda;
            if (m.posRate > 0.0) {
              const double gap = m.posJumpRate - lambda;
              v += m.posRate * m.posJumpRate / (gap * gap);
            }
            if (m.negRate > 0.0) {
              const double gap = m.negJumpRate + lambda;
              v -= m.negRate * m.negJumpRate / (gap * gap);
            }
            return v;
          }},
      model);
}

double psiSecond(const Model& model, double lambda) {
  requireInDomain(model, lambda);
  return std::visit(
      Overloaded{
          [&](const TwoPoint& law) {
            const double t = std::tanh(lambda + twoPointShift(law));
            return 1.0 - t * t;
          },
          [&](const NormalSteps& law) { return law.varStep; },
          [&](const LevyModel& m) {
            double v = m.sigma * m.sigma;
            if (m.posRate > 0.0) {
              const double gap = m.posJumpRate - lambda;
              v += 2.0 * m.posRate * m.posJumpRate / (gap * gap * gap);
            }
            if (m.negRate > 0.0) {
              const double gap = m.negJumpRate + lambda;
              v += 2.0 * m.negRate * m.negJumpRate / (gap * gap * gap);
            }
            return v;
          }},
      model);
}

Model tilt(const Model& model, double lambda) {
  if (lambda == 0.0) return model;
  requireInDomain(model, lambda);
  return std::visit(
      Overloaded{
          [&](const TwoPoint& law) -> Model {
            // p e^l / (p e^l + q e^-l), written to avoid overflow.
            const double ratio = std::exp(-2.0 * lambda) * (1.0 - law.p) / law.p;
            return TwoPoint{1.0 / (1.0 + ratio)};
          },
          [&](const NormalSteps& law) -> Model {
            return NormalSteps{law.meanStep + lambda * law.varStep, law.varStep};
          },
          [&](const LevyModel& m) -> Model {
            LevyModel t = m;
            t.driftMu = m.driftMu - lambda * m.sigma * m.sigma;
            if (m.posRate > 0.0) {
              t.posRate = m.posRate * m.posJumpRate / (m.posJumpRate - lambda);
              t.posJumpRate = m.posJumpRate - lambda;
            }
            if (m.negRate > 0.0) {
              t.negRate = m.negRate * m.negJumpRate / (m.negJumpRate + lambda);
              t.negJumpRate = m.negJumpRate + lambda;
            }
            return t;
          }},
      model);
}

double solveCramerRoot(const Model& model) {
  return CumulantProfile(model).lambdaStar();
}

CumulantProfile::CumulantProfile(Model model)
    : model_(std::move(model)), domain_(psiDomain(model_)) {
  validate(model_);
  const double mean = rare_reach::psiPrime(model_, 0.0);
  if (!(mean < 0.0)) {
    std::ostringstream msg;
    msg << "Cramer condition fails for " << describe(model_)
        << ": mean increment psi'(0) = " << mean
        << " is not negative, so reaching a high barrier is not rare";
    throw NoCramerRoot(msg.str());
  }
  const auto dpsi = [&](double l) { return rare_reach::psiPrime(model_, l); };
  const auto d2psi = [&](double l) { return rare_reach::psiSecond(model_, l); };
  const auto f = [&](double l) { return rare_reach::psi(model_, l); };

  if (const auto* law = std::get_if<TwoPoint>(&model_)) {
    // Closed forms: psi' = tanh(l + a), lambdaStar = log(q / p).
    lambdaZero_ = -twoPointShift(*law);
    lambdaStar_ = std::log1p(-law->p) - std::log(law->p);
  } else if (const auto* law = std::get_if<NormalSteps>(&model_)) {
    lambdaZero_ = -law->meanStep / law->varStep;
    lambdaStar_ = -2.0 * law->meanStep / law->varStep;
  } else {
    const double upper0 = findPositiveUpper(dpsi, 0.0, domain_.hi);
    if (std::isnan(upper0))
      throw NoCramerRoot("psi' never turns positive on the domain of " +
                         describe(model_));
    lambdaZero_ = increasingRoot(dpsi, d2psi, 0.0, upper0);
    const double upper = findPositiveUpper(f, lambdaZero_, domain_.hi);
    if (std::isnan(upper))
      throw NoCramerRoot("psi < 0 on the whole positive domain of " +
                         describe(model_));
    lambdaStar_ = increasingRoot(f, dpsi, lambdaZero_, upper);
  }
  psiPrimeAtStar_ = rare_reach::psiPrime(model_, lambdaStar_);
}

double CumulantProfile::psiPrimeSup() const {
  if (std::holds_alternative<TwoPoint>(model_)) return 1.0;
  return kInf;
}

double solveLambdaForDrift(const CumulantProfile& profile, double targetDrift) {
  if (!(targetDrift > 0.0))
    throw InvalidArgument("solveLambdaForDrift: target drift must be > 0");
  if (!(targetDrift < profile.psiPrimeSup())) {
    std::ostringstream msg;
    msg << "drift " << targetDrift << " is not below sup psi' = "
        << profile.psiPrimeSup()
        << "; the budget is too tight for any tilted drift";
    throw DriftOutOfRange(msg.str());
  }
  return invertPsiPrime(profile.model(), targetDrift);
}

double legendre(const CumulantProfile& profile, double s) {
  const Model& model = profile.model();
  if (const auto* law = std::get_if<TwoPoint>(&model)) {
    // Closure of the range of psi' is [-1, 1]; the supremum escapes to
    // infinity at the endpoints.
    if (s == 1.0) return -std::log(law->p);
    if (s == -1.0) return -std::log1p(-law->p);
  }
  if (s == profile.psiPrime(0.0)) return 0.0;
  const double lambda = invertPsiPrime(model, s);
  return lambda * s - profile.psi(lambda);
}

double particleThreshold(const CumulantProfile& profile, double budgetSlope) {
  return profile.psiPrimeAtStar() * budgetSlope;
}

int optimalParticles(const CumulantProfile& profile, double budgetSlope) {
  if (!(budgetSlope > 0.0))
    throw InvalidArgument("optimalParticles: budget slope must be > 0");
  const double v = particleThreshold(profile, budgetSlope);
  if (v <= 1.0) return 1;
  const double nearest = std::round(v);
  double ceiling = std::ceil(v);
  if (std::abs(v - nearest) <= 1e-9 * v) ceiling = nearest;
  const double n = ceiling - 1.0;
  if (n >= static_cast<double>(std::numeric_limits<int>::max()))
    throw InvalidArgument("optimalParticles: particle count overflows int");
  return std::max(1, static_cast<int>(n));
}

}  // namespace rare_reach
