#pragma once

#include <limits>
#include <string>
#include <variant>

namespace rare_reach {

/// Random-walk increment: +1 with probability p, -1 otherwise.
struct TwoPoint {
  double p = 0.0;
};

/// Random-walk increment: Normal(meanStep, varStep).
struct NormalSteps {
  double meanStep = 0.0;
  double varStep = 1.0;
};

using IncrementLaw = std::variant<TwoPoint, NormalSteps>;

/**
 * Brownian motion with drift -driftMu and volatility sigma, plus independent
 * compound Poisson jumps: positive jumps at rate posRate with Exp(posJumpRate)
 * sizes, negative jumps at rate negRate with Exp(negJumpRate) sizes.
 *
 * psi(l) = -driftMu l + sigma^2 l^2 / 2 + posRate l / (posJumpRate - l)
 *          - negRate l / (negJumpRate + l)
 */
struct LevyModel {
  double driftMu = 0.0;
  double sigma = 1.0;
  double posRate = 0.0;
  double posJumpRate = 1.0;
  double negRate = 0.0;
  double negJumpRate = 1.0;

  static LevyModel brownian(double mu, double sigma = 1.0);
  /// Drift -1, unit volatility, up-jumps at rate 2 with mean 1/4 and
  /// down-jumps at rate 3 with mean 1. Cramer root 2, psi'(2) = 8/3.
  static LevyModel exponentialJumpsExample();

  bool hasJumps() const { return posRate > 0.0 || negRate > 0.0; }
  bool operator==(const LevyModel&) const = default;
};

/// Any driving noise the toolkit can simulate.
using Model = std::variant<TwoPoint, NormalSteps, LevyModel>;

/// Structural checks (probabilities in range, positive scales). Does not
/// require a negative mean: tilted laws drift upwards.
void validate(const Model& model);
bool isDiscreteTime(const Model& model);
/// True for a jump-free Levy model (linear Brownian motion).
bool isBrownian(const Model& model);
std::string describe(const Model& model);

/// Open interval on which psi is finite.
struct Interval {
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();
};

Interval psiDomain(const Model& model);

/// Endpoints of a finite domain are rejected within this distance.
inline constexpr double kDomainGuard = 1e-12;

double psi(const Model& model, double lambda);
double psiPrime(const Model& model, double lambda);
double psiSecond(const Model& model, double lambda);

/// The law of the same family under the exponentially tilted measure P^lambda.
/// psi_tilted(u) = psi(lambda + u) - psi(lambda).
Model tilt(const Model& model, double lambda);

/// Positive root of psi. Throws NoCramerRoot when the mean is not negative
/// or psi stays negative on (0, lambdaMax).
double solveCramerRoot(const Model& model);

/**
 * Solved constants of one admissible model.
 *
 * Construction enforces the negative-mean Cramer setting: psi'(0) < 0 and a
 * positive root lambdaStar inside the domain. lambdaZero is the minimiser of
 * psi on (0, lambdaStar).
 */
class CumulantProfile {
 public:
  explicit CumulantProfile(Model model);

  const Model& model() const { return model_; }
  double lambdaStar() const { return lambdaStar_; }
  double lambdaZero() const { return lambdaZero_; }
  double lambdaMax() const { return domain_.hi; }
  Interval domain() const { return domain_; }

  double psi(double lambda) const { return rare_reach::psi(model_, lambda); }
  double psiPrime(double lambda) const {
    return rare_reach::psiPrime(model_, lambda);
  }
  double psiSecond(double lambda) const {
    return rare_reach::psiSecond(model_, lambda);
  }
  /// Drift of the process under P^{lambdaStar}.
  double psiPrimeAtStar() const { return psiPrimeAtStar_; }
  /// Supremum of psi' over the domain (+inf unless bounded increments).
  double psiPrimeSup() const;

 private:
  Model model_;
  Interval domain_;
  double lambdaZero_ = 0.0;
  double lambdaStar_ = 0.0;
  double psiPrimeAtStar_ = 0.0;
};

/// The lambda in (lambdaZero, lambdaMax) with psi'(lambda) = targetDrift.
/// A budget B(x) = C x corresponds to targetDrift = 1 / C.
double solveLambdaForDrift(const CumulantProfile& profile, double targetDrift);

/// Convex conjugate zeta[s] = sup_l { l s - psi(l) }.
double legendre(const CumulantProfile& profile, double s);

/// psi'(lambdaStar) * C: the particle count at which the phase transition sits.
double particleThreshold(const CumulantProfile& profile, double budgetSlope);

/**
 * Asymptotically optimal number of independent particles for the budget
 * B(x) = budgetSlope * x: max{N >= 1 : N / C < psi'(lambdaStar)}, or 1 when
 * psi'(lambdaStar) C <= 1.
 *
 * A product within 1e-9 (relative) of an integer is treated as that integer,
 * so the excluded boundary N psi'(lambda) = psi'(lambdaStar) is never chosen
 * because of rounding in psi'(lambdaStar).
 */
int optimalParticles(const CumulantProfile& profile, double budgetSlope);

}  // namespace rare_reach
