#include "rare_reach/stats.hpp"

#include <algorithm>
#include <cmath>

#include <boost/math/distributions/chi_squared.hpp>

#include "rare_reach/error.hpp"

namespace rare_reach::stats {

double pairwiseSum(std::span<const double> values) {
  if (values.size() <= 16) {
    double s = 0.0;
    for (double v : values) s += v;
    return s;
  }
  const std::size_t half = values.size() / 2;
  return pairwiseSum(values.first(half)) + pairwiseSum(values.subspan(half));
}

double Summary::stdError() const {
  if (count == 0) return 0.0;
  return std::sqrt(variance / static_cast<double>(count));
}

Summary summarize(std::span<const double> values) {
  Summary s;
  s.count = values.size();
  if (s.count == 0) return s;
  s.mean = pairwiseSum(values) / static_cast<double>(s.count);
  if (s.count > 1) {
    std::vector<double> sq(values.size());
    std::transform(values.begin(), values.end(), sq.begin(), [&](double v) {
      const double d = v - s.mean;
      return d * d;
    });
    s.variance = pairwiseSum(sq) / static_cast<double>(s.count - 1);
  }
  return s;
}

double Proportion::estimate() const {
  if (trials == 0) return 0.0;
  return static_cast<double>(successes) / static_cast<double>(trials);
}

double Proportion::stdError() const {
  if (trials == 0) return 0.0;
  const double p = estimate();
  return std::sqrt(p * (1.0 - p) / static_cast<double>(trials));
}

double kolmogorovPValue(std::size_t n, double d) {
  if (n == 0) return 1.0;
  const double sqrtN = std::sqrt(static_cast<double>(n));
  const double lambda = (sqrtN + 0.12 + 0.11 / sqrtN) * d;
  if (lambda < 1e-3) return 1.0;
  double sum = 0.0;
  double sign = 1.0;
  for (int j = 1; j <= 100; ++j) {
    const double term = std::exp(-2.0 * j * j * lambda * lambda);
    sum += sign * term;
    if (term < 1e-16) break;
    sign = -sign;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

TestResult ksTest(std::vector<double> samples,
                  const std::function<double(double)>& cdf) {
  if (samples.empty()) throw InvalidArgument("ksTest: no samples");
  std::sort(samples.begin(), samples.end());
  const double n = static_cast<double>(samples.size());
  double d = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double f = cdf(samples[i]);
    d = std::max({d, static_cast<double>(i + 1) / n - f,
                  f - static_cast<double>(i) / n});
  }
  return {d, kolmogorovPValue(samples.size(), d)};
}

double chiSquareSurvival(double statistic, double dof) {
  if (statistic <= 0.0) return 1.0;
  boost::math::chi_squared dist(dof);
  return boost::math::cdf(boost::math::complement(dist, statistic));
}

TestResult chiSquareIndependence(const std::vector<std::vector<double>>& table) {
  const std::size_t rows = table.size();
  if (rows < 2) throw InvalidArgument("chiSquareIndependence: need >= 2 rows");
  const std::size_t cols = table.front().size();
  if (cols < 2) throw InvalidArgument("chiSquareIndependence: need >= 2 columns");
  std::vector<double> rowSum(rows, 0.0), colSum(cols, 0.0);
  double total = 0.0;
  for (std::size_t i = 0; i < rows; ++i) {
    if (table[i].size() != cols)
      throw InvalidArgument("chiSquareIndependence: ragged table");
    for (std::size_t j = 0; j < cols; ++j) {
      rowSum[i] += table[i][j];
      colSum[j] += table[i][j];
      total += table[i][j];
    }
  }
  double stat = 0.0;
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < cols; ++j) {
      const double expected = rowSum[i] * colSum[j] / total;
      if (expected <= 0.0) continue;
      const double diff = table[i][j] - expected;
      stat += diff * diff / expected;
    }
  }
  const double dof = static_cast<double>((rows - 1) * (cols - 1));
  return {stat, chiSquareSurvival(stat, dof)};
}

double totalVariation(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size())
    throw InvalidArgument("totalVariation: length mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
  return 0.5 * s;
}

std::vector<double> histogram(std::span<const double> samples, double lo,
                              double hi, std::size_t bins) {
  if (bins == 0 || !(hi > lo)) throw InvalidArgument("histogram: bad range");
  std::vector<double> counts(bins, 0.0);
  double kept = 0.0;
  const double width = (hi - lo) / static_cast<double>(bins);
  for (double s : samples) {
    if (s < lo || s >= hi) continue;
    auto b = static_cast<std::size_t>((s - lo) / width);
    if (b >= bins) b = bins - 1;
    counts[b] += 1.0;
    kept += 1.0;
  }
  if (kept > 0.0)
    for (double& c : counts) c /= kept;
  return counts;
}

}  // namespace rare_reach::stats
