#include "rare_reach/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numbers>
#include <string>

#include "rare_reach/error.hpp"

namespace rare_reach::oracle {
namespace {

struct Kahan {
  double sum = 0.0;
  double carry = 0.0;
  void add(double v) {
    const double y = v - carry;
    const double t = sum + y;
    carry = (t - sum) - y;
    sum = t;
  }
};

void requireProbability(double p) {
  if (!(p > 0.0 && p < 1.0))
    throw InvalidArgument("oracle: need 0 < p < 1, got " + std::to_string(p));
}

// Standard normal CDF.
double normalCdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

double simpsonStep(const std::function<double(double)>& f, double a, double b,
                   double fa, double fm, double fb, double whole, double tol,
                   int depth, int maxDepth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = f(lm);
  const double frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  if (std::abs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
  if (depth >= maxDepth)
    throw ToleranceNotMet("quadrature: depth cap reached near [" +
                          std::to_string(a) + ", " + std::to_string(b) + "]");
  return simpsonStep(f, a, m, fa, flm, fm, left, 0.5 * tol, depth + 1,
                     maxDepth) +
         simpsonStep(f, m, b, fm, frm, fb, right, 0.5 * tol, depth + 1,
                     maxDepth);
}

}  // namespace

DpTable exactWalkPassage(double p, int x, int t) {
  requireProbability(p);
  if (x < 1 || t < 0) throw InvalidArgument("exactWalkPassage: need x >= 1, t >= 0");
  if (exactWalkPassageCost(x, t) > kDpCap)
    throw SizeError("exactWalkPassage: " + std::to_string(exactWalkPassageCost(x, t)) +
                    " cell updates exceed the dense cap");
  const double q = 1.0 - p;
  // Index i holds position i - t, so positions -t..x-1.
  const std::size_t width = static_cast<std::size_t>(x) + static_cast<std::size_t>(t);
  const std::size_t origin = static_cast<std::size_t>(t);
  std::vector<double> cur(width, 0.0), next(width, 0.0);
  cur[origin] = 1.0;
  DpTable table;
  table.barrier = x;
  table.maxTime = t;
  table.cdf.assign(static_cast<std::size_t>(t) + 1, 0.0);
  Kahan hit;
  for (int s = 1; s <= t; ++s) {
    // Occupied positions at time s-1 lie in [-(s-1), x-1].
    const std::size_t lo = origin - static_cast<std::size_t>(s - 1);
    std::fill(next.begin() + static_cast<std::ptrdiff_t>(lo - 1), next.end(), 0.0);
    for (std::size_t i = lo; i < width; ++i) {
      const double mass = cur[i];
      // Subnormal tails are far below the cdf resolution and slow to multiply.
      if (mass < std::numeric_limits<double>::min()) continue;
      if (i + 1 == width)
        hit.add(mass * p);
      else
        next[i + 1] += mass * p;
      next[i - 1] += mass * q;
    }
    std::swap(cur, next);
    table.cdf[static_cast<std::size_t>(s)] = std::min(1.0, hit.sum);
  }
  table.interior = std::move(cur);
  return table;
}

double enumerateWalkPassage(double p, int x, int t) {
  requireProbability(p);
  if (t < 0 || t > 24) throw SizeError("enumerateWalkPassage: need 0 <= t <= 24");
  Kahan total;
  const std::uint32_t paths = 1u << t;
  for (std::uint32_t bits = 0; bits < paths; ++bits) {
    int pos = 0;
    bool hit = false;
    double prob = 1.0;
    for (int s = 0; s < t; ++s) {
      const bool up = (bits >> s) & 1u;
      prob *= up ? p : 1.0 - p;
      pos += up ? 1 : -1;
      if (pos >= x) hit = true;
    }
    if (hit) total.add(prob);
  }
  return total.sum;
}

ExitResult exactWalkExit(double p, int y0, int x) {
  requireProbability(p);
  if (!(y0 > 0 && y0 < x)) throw InvalidArgument("exactWalkExit: need 0 < y0 < x");
  const double q = 1.0 - p;
  ExitResult out;
  const double r = q / p;
  if (std::abs(r - 1.0) < 1e-14) {
    out.qUpper = static_cast<double>(y0) / x;
  } else {
    // (1 - r^y0) / (1 - r^x) through log-space expm1 for large exponents.
    const double lr = std::log(r);
    out.qUpper = std::expm1(y0 * lr) / std::expm1(x * lr);
  }
  // E(y) = 1 + p E(y+1) + q E(y-1), E(0) = E(x) = 0; Thomas algorithm on
  // interior y = 1..x-1 with -q E(y-1) + E(y) - p E(y+1) = 1.
  const int n = x - 1;
  std::vector<double> c(static_cast<std::size_t>(n)), d(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const double denom = 1.0 - (i > 0 ? -q * c[i - 1] : 0.0);
    c[i] = -p / denom;
    d[i] = (1.0 + (i > 0 ? q * d[i - 1] : 0.0)) / denom;
  }
  std::vector<double> e(static_cast<std::size_t>(n));
  for (int i = n - 1; i >= 0; --i) e[i] = d[i] - (i + 1 < n ? c[i] * e[i + 1] : 0.0);
  out.meanTime = e[static_cast<std::size_t>(y0 - 1)];
  return out;
}

QsdResult qsdEigen(const std::vector<std::vector<double>>& matrix, TimeMode mode,
                   double tol, int maxIterations) {
  const std::size_t n = matrix.size();
  if (n == 0) throw InvalidArgument("qsdEigen: empty matrix");
  for (const auto& row : matrix)
    if (row.size() != n) throw InvalidArgument("qsdEigen: matrix is not square");

  // Work with a kernel K whose principal eigenvector is the QSD and whose
  // spectrum is shifted away from -1 so that power iteration converges.
  double scale = 1.0;
  if (mode == TimeMode::Continuous) {
    for (std::size_t i = 0; i < n; ++i) scale = std::max(scale, -matrix[i][i]);
  }
  auto kernelEntry = [&](std::size_t i, std::size_t j) {
    double a = matrix[i][j];
    if (mode == TimeMode::Continuous) a = (i == j ? 1.0 : 0.0) + a / scale;
    return 0.5 * (a + (i == j ? 1.0 : 0.0));
  };
  std::vector<std::vector<double>> kernel(n, std::vector<double>(n));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) kernel[i][j] = kernelEntry(i, j);

  std::vector<double> nu(n, 1.0 / static_cast<double>(n)), next(n);
  QsdResult out;
  double rho = 0.0;
  for (int it = 1; it <= maxIterations; ++it) {
    std::fill(next.begin(), next.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      if (nu[i] == 0.0) continue;
      for (std::size_t j = 0; j < n; ++j) next[j] += nu[i] * kernel[i][j];
    }
    Kahan mass;
    for (double v : next) mass.add(v);
    rho = mass.sum;
    if (!(rho > 0.0)) throw ConvergenceError("qsdEigen: kernel kills all mass");
    double change = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      next[j] /= rho;
      change += std::abs(next[j] - nu[j]);
    }
    std::swap(nu, next);
    out.iterations = it;
    if (change <= 0.25 * tol) break;
    if (it == maxIterations)
      throw ConvergenceError("qsdEigen: no convergence after " +
                             std::to_string(maxIterations) + " iterations");
  }

  const double kernelEig = 2.0 * rho - 1.0;
  out.eigenvalue = mode == TimeMode::Continuous ? scale * (kernelEig - 1.0) : kernelEig;
  out.decayRate =
      mode == TimeMode::Continuous ? -out.eigenvalue : -std::log(out.eigenvalue);
  double residual = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    double v = 0.0;
    for (std::size_t i = 0; i < n; ++i) v += nu[i] * matrix[i][j];
    residual += std::abs(v - out.eigenvalue * nu[j]);
  }
  out.residual = residual;
  out.nu = std::move(nu);
  return out;
}

std::vector<std::vector<double>> birthDeathKernel(int n, double pUp, double pDown) {
  if (n < 1 || pUp < 0.0 || pDown < 0.0 || pUp + pDown > 1.0)
    throw InvalidArgument("birthDeathKernel: bad parameters");
  std::vector<std::vector<double>> k(static_cast<std::size_t>(n),
                                     std::vector<double>(static_cast<std::size_t>(n), 0.0));
  for (int i = 0; i < n; ++i) {
    k[i][i] = 1.0 - pUp - pDown;
    if (i + 1 < n) k[i][i + 1] = pUp;
    if (i > 0) k[i][i - 1] = pDown;
  }
  return k;
}

double quadrature(const std::function<double(double)>& f, double a, double b,
                  double tol, int maxDepth) {
  if (!(tol > 0.0)) throw InvalidArgument("quadrature: tol must be > 0");
  if (a == b) return 0.0;
  const double fa = f(a);
  const double fb = f(b);
  const double fm = f(0.5 * (a + b));
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return simpsonStep(f, a, b, fa, fm, fb, whole, tol, 0, maxDepth);
}

double brownianPassageCdf(double mu, double sigma, double x, double t) {
  if (t <= 0.0) return x <= 0.0 ? 1.0 : 0.0;
  if (x <= 0.0) return 1.0;
  const double st = sigma * std::sqrt(t);
  const double first = normalCdf((-x - mu * t) / st);
  const double z2 = (-x + mu * t) / st;
  const double phi2 = normalCdf(z2);
  if (phi2 == 0.0) return first;
  const double second = std::exp(-2.0 * mu * x / (sigma * sigma) + std::log(phi2));
  return std::min(1.0, first + second);
}

double brownianExitUpper(double mu, double sigma, double y0, double x) {
  if (!(y0 > 0.0 && y0 < x)) throw InvalidArgument("brownianExitUpper: need 0 < y0 < x");
  const double k = 2.0 * mu / (sigma * sigma);
  if (std::abs(k) < 1e-14) return y0 / x;
  return std::expm1(k * y0) / std::expm1(k * x);
}

double brownianQsdNormalizer(double mu, double x) {
  const double pi = std::numbers::pi;
  return (mu * mu * x * x + pi * pi) / (pi * x * (std::exp(-mu * x) + 1.0));
}

double brownianQsdDensity(double mu, double x, double y) {
  if (y <= 0.0 || y >= x) return 0.0;
  return brownianQsdNormalizer(mu, x) * std::sin(std::numbers::pi * y / x) *
         std::exp(-mu * y);
}

double brownianQsdCdf(double mu, double x, double y) {
  if (y <= 0.0) return 0.0;
  if (y >= x) return 1.0;
  const double k = std::numbers::pi / x;
  const double prim = (k - std::exp(-mu * y) * (mu * std::sin(k * y) + k * std::cos(k * y))) /
                      (mu * mu + k * k);
  return std::clamp(brownianQsdNormalizer(mu, x) * prim, 0.0, 1.0);
}

double brownianQsdRate(double mu, double x) {
  const double pi = std::numbers::pi;
  return 0.5 * (mu * mu + pi * pi / (x * x));
}

double brownianQsdUpper(double mu, double x) { return 1.0 / (std::exp(mu * x) + 1.0); }

LinearFit fitLine(const std::vector<double>& xs, const std::vector<double>& ys) {
  if (xs.size() != ys.size() || xs.size() < 2)
    throw InvalidArgument("fitLine: need >= 2 paired points");
  const double n = static_cast<double>(xs.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxy += (xs[i] - mx) * (ys[i] - my);
    sxx += (xs[i] - mx) * (xs[i] - mx);
  }
  if (sxx == 0.0) throw InvalidArgument("fitLine: all x values equal");
  LinearFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  return fit;
}

}  // namespace rare_reach::oracle
