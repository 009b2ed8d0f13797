#pragma once

#include <cmath>
#include <cstdint>

#include <gtest/gtest.h>

namespace rare_reach::testkit {

inline constexpr std::uint64_t kSeed = 20240611;

/// |estimate - truth| <= k * stdError, reported with the z-score on failure.
inline ::testing::AssertionResult withinSigma(double estimate, double truth,
                                              double stdError, double k = 3.0) {
  const double z = (estimate - truth) / stdError;
  if (std::abs(z) <= k) return ::testing::AssertionSuccess();
  return ::testing::AssertionFailure()
         << "estimate " << estimate << " vs " << truth << " (se " << stdError
         << ", z = " << z << ")";
}

/// Binomial standard error for a proportion with true value p.
inline double binomialSe(double p, double n) { return std::sqrt(p * (1.0 - p) / n); }

inline ::testing::AssertionResult relClose(double a, double b, double rel) {
  if (std::abs(a - b) <= rel * std::abs(b)) return ::testing::AssertionSuccess();
  return ::testing::AssertionFailure()
         << a << " vs " << b << " (relative error " << std::abs(a - b) / std::abs(b)
         << " > " << rel << ")";
}

}  // namespace rare_reach::testkit
