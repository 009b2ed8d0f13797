#pragma once

#include <cstddef>
#include <functional>
#include <vector>

// Brute-force reference values. Nothing here simulates: every function is a
// deterministic computation meant to check the simulation code.
namespace rare_reach::oracle {

/// Exact first-passage law of a +-1 walk started at 0.
struct DpTable {
  int barrier = 0;
  int maxTime = 0;
  /// cdf[s] = P(tau(x) <= s), s = 0..maxTime.
  std::vector<double> cdf;
  /// Sub-probability mass on positions -maxTime..barrier-1 at time maxTime
  /// (index 0 is position -maxTime) for paths that have not yet hit.
  std::vector<double> interior;

  double at(int s) const { return cdf.at(static_cast<std::size_t>(s)); }
};

/// Cell updates of exactWalkPassage(p, x, t): about t (x + t) / 2.
inline double exactWalkPassageCost(int x, int t) {
  return 0.5 * static_cast<double>(t) * (static_cast<double>(x) + static_cast<double>(t));
}

/// Largest exactWalkPassageCost accepted (a few seconds of work).
inline constexpr double kDpCap = 5e9;

/// Forward recursion with absorption at x. Throws SizeError when
/// exactWalkPassageCost(x, t) > kDpCap.
DpTable exactWalkPassage(double p, int x, int t);

/// P(tau(x) <= t) by enumerating all 2^t step sequences (t <= 24).
double enumerateWalkPassage(double p, int x, int t);

struct ExitResult {
  double qUpper = 0.0;    // P(hit x before 0)
  double meanTime = 0.0;  // E[exit time]
};

/// Gambler's ruin from y0 in (0, x): closed-form qUpper, mean exit time from
/// a tridiagonal solve.
ExitResult exactWalkExit(double p, int y0, int x);

enum class TimeMode { Discrete, Continuous };

struct QsdResult {
  std::vector<double> nu;     // probability vector
  double eigenvalue = 0.0;    // principal eigenvalue of the input matrix
  double decayRate = 0.0;     // beta
  double residual = 0.0;      // || nu M - eigenvalue nu ||_1
  int iterations = 0;
};

/**
 * Quasi-stationary distribution of a killed chain.
 *
 * Discrete: `matrix` is the sub-stochastic kernel restricted to the interior;
 * beta = -log(eigenvalue). Continuous: `matrix` is the generator restricted
 * to the interior (rows sum to minus the killing rate); beta = -eigenvalue.
 * Power iteration on a shifted, uniformized kernel. Throws ConvergenceError
 * if the residual does not reach `tol` within `maxIterations`.
 */
QsdResult qsdEigen(const std::vector<std::vector<double>>& matrix,
                   TimeMode mode = TimeMode::Discrete, double tol = 1e-12,
                   int maxIterations = 2'000'000);

/// Killed kernel of the lazy birth-death walk on {1..n}: up with pUp, down
/// with pDown, stay otherwise; leaving {1..n} kills.
std::vector<std::vector<double>> birthDeathKernel(int n, double pUp,
                                                  double pDown);

/// Adaptive Simpson quadrature. Throws ToleranceNotMet when the recursion
/// depth cap is reached before the local error estimate drops below tol.
double quadrature(const std::function<double(double)>& f, double a, double b,
                  double tol, int maxDepth = 50);

// Brownian motion with drift -mu and volatility sigma, started at 0.

/// P(sup_{s<=t} Z(s) >= x).
double brownianPassageCdf(double mu, double sigma, double x, double t);
/// P(hit x before 0 | Z(0) = y0).
double brownianExitUpper(double mu, double sigma, double y0, double x);

// Quasi-stationary law on (0, x) of unit-volatility Brownian motion with
// drift -mu.

double brownianQsdNormalizer(double mu, double x);
double brownianQsdDensity(double mu, double x, double y);
double brownianQsdCdf(double mu, double x, double y);
/// Absorption rate (mu^2 + pi^2 / x^2) / 2.
double brownianQsdRate(double mu, double x);
/// Upper exit probability of a cycle started from the QSD: 1 / (e^{mu x} + 1).
double brownianQsdUpper(double mu, double x);

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
};

/// Ordinary least squares y = slope * x + intercept.
LinearFit fitLine(const std::vector<double>& xs, const std::vector<double>& ys);

}  // namespace rare_reach::oracle
