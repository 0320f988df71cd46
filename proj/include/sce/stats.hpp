#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "sce/errors.hpp"

namespace sce {

struct Interval {
  double low = 0.0;
  double high = 0.0;
};

// Wilson score interval for a binomial proportion, 95% two-sided.
inline Interval wilson_ci(int successes, int trials, double z = 1.959964) {
  if (trials <= 0) fail(Errc::bad_argument, "wilson_ci needs trials > 0");
  const double n = trials;
  const double p = static_cast<double>(successes) / n;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / n;
  const double center = (p + z2 / (2.0 * n)) / denom;
  const double half = (z / denom) * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n));
  return {center - half, center + half};
}

namespace detail {

// Regularized incomplete beta via continued fraction (Lentz), for binomial tails.
inline double betacf(double a, double b, double x) {
  const double eps = 1e-14;
  const double fpmin = 1e-300;
  const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < fpmin) d = fpmin;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= 300; ++m) {
    const int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < fpmin) d = fpmin;
    c = 1.0 + aa / c;
    if (std::fabs(c) < fpmin) c = fpmin;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < fpmin) d = fpmin;
    c = 1.0 + aa / c;
    if (std::fabs(c) < fpmin) c = fpmin;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < eps) break;
  }
  return h;
}

inline double betainc(double a, double b, double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double lnbeta = std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
  const double front = std::exp(a * std::log(x) + b * std::log(1.0 - x) - lnbeta);
  if (x < (a + 1.0) / (a + b + 2.0)) return front * betacf(a, b, x) / a;
  return 1.0 - front * betacf(b, a, 1.0 - x) / b;
}

}  // namespace detail

// P(X >= k) for X ~ Binomial(n, p). Exact via the incomplete beta identity.
inline double binomial_sf(int k, int n, double p) {
  if (n < 0 || k < 0 || p < 0.0 || p > 1.0) fail(Errc::bad_argument, "binomial_sf arguments");
  if (k <= 0) return 1.0;
  if (k > n) return 0.0;
  return detail::betainc(static_cast<double>(k), static_cast<double>(n - k + 1), p);
}

inline double mean_of(std::span<const double> xs) {
  if (xs.empty()) fail(Errc::bad_argument, "mean of empty span");
  double s = 0.0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

// Population standard deviation (divide by n).
inline double pop_stddev(std::span<const double> xs) {
  const double m = mean_of(xs);
  double s = 0.0;
  for (double x : xs) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(xs.size()));
}

// Sample standard deviation (divide by n-1); 0 for a single value.
inline double sample_stddev(std::span<const double> xs) {
  if (xs.size() < 2) return 0.0;
  const double m = mean_of(xs);
  double s = 0.0;
  for (double x : xs) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(xs.size() - 1));
}

inline double sem_of(std::span<const double> xs) {
  if (xs.empty()) fail(Errc::bad_argument, "sem of empty span");
  return sample_stddev(xs) / std::sqrt(static_cast<double>(xs.size()));
}

// Balanced pairwise summation: exact cancellation structure for power-of-two
// counts of identical values, and better rounding behavior in general.
inline double pairwise_sum(std::span<const double> xs) {
  if (xs.empty()) return 0.0;
  if (xs.size() == 1) return xs[0];
  if (xs.size() == 2) return xs[0] + xs[1];
  const size_t half = xs.size() / 2;
  return pairwise_sum(xs.subspan(0, half)) + pairwise_sum(xs.subspan(half));
}

inline double pairwise_mean(std::span<const double> xs) {
  if (xs.empty()) fail(Errc::bad_argument, "mean of empty span");
  return pairwise_sum(xs) / static_cast<double>(xs.size());
}

}  // namespace sce
