#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace rare_reach::stats {

/// Two-sided 95% normal quantile.
inline constexpr double kZ95 = 1.959963984540054;

/// Pairwise summation; the result depends only on the order of `values`.
double pairwiseSum(std::span<const double> values);

struct Summary {
  std::size_t count = 0;
  double mean = 0.0;
  double variance = 0.0;  // unbiased sample variance

  double stdError() const;
  double halfWidth95() const { return kZ95 * stdError(); }
};

Summary summarize(std::span<const double> values);

/// Binomial proportion with a Wald standard error.
struct Proportion {
  std::size_t successes = 0;
  std::size_t trials = 0;

  double estimate() const;
  double stdError() const;
  double halfWidth95() const { return kZ95 * stdError(); }
};

struct TestResult {
  double statistic = 0.0;
  double pValue = 0.0;
};

/// Asymptotic Kolmogorov tail with the usual finite-n correction of d.
double kolmogorovPValue(std::size_t n, double d);

/// One-sample Kolmogorov-Smirnov test against a continuous CDF.
TestResult ksTest(std::vector<double> samples,
                  const std::function<double(double)>& cdf);

/// Pearson chi-square test of independence on an r x c contingency table.
TestResult chiSquareIndependence(const std::vector<std::vector<double>>& table);

/// Upper tail of the chi-square distribution.
double chiSquareSurvival(double statistic, double dof);

/// Total-variation distance between two probability vectors of equal length.
double totalVariation(std::span<const double> a, std::span<const double> b);

/// Normalized histogram of `samples` on [lo, hi) with `bins` equal cells.
/// Samples outside the range are ignored; weights sum to 1 over kept samples.
std::vector<double> histogram(std::span<const double> samples, double lo,
                              double hi, std::size_t bins);

}  // namespace rare_reach::stats
