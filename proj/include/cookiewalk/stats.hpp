#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>

// Small summary-statistics helpers shared by the Monte Carlo drivers.

namespace cookiewalk {

// Welford-style running mean/variance; mergeable so that parallel workers
// can combine partial results deterministically.
struct OnlineStats {
  int64_t count = 0;
  double mean = 0.0;
  double m2 = 0.0;

  void add(double x) {
    ++count;
    const double d = x - mean;
    mean += d / static_cast<double>(count);
    m2 += d * (x - mean);
  }

  void merge(const OnlineStats& o) {
    if (o.count == 0) return;
    if (count == 0) {
      *this = o;
      return;
    }
    const double d = o.mean - mean;
    const int64_t n = count + o.count;
    mean += d * static_cast<double>(o.count) / static_cast<double>(n);
    m2 += o.m2 + d * d * static_cast<double>(count) *
                     static_cast<double>(o.count) / static_cast<double>(n);
    count = n;
  }

  double variance() const {
    // m2 is mathematically non-negative; rounding can leave a tiny
    // negative residue for (near-)constant inputs.
    return count > 1 ? std::max(0.0, m2 / static_cast<double>(count - 1))
                     : 0.0;
  }
  double stddev() const { return std::sqrt(variance()); }
  double standard_error() const {
    return count > 0 ? stddev() / std::sqrt(static_cast<double>(count)) : 0.0;
  }
};

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

// Wilson score interval for a binomial proportion.
inline Interval wilson_interval(int64_t successes, int64_t trials, double z) {
  if (trials <= 0) return {0.0, 1.0};
  const double n = static_cast<double>(trials);
  const double p = static_cast<double>(successes) / n;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / n;
  const double center = (p + z2 / (2.0 * n)) / denom;
  const double half =
      z * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / denom;
  double lo = center - half, hi = center + half;
  if (lo < 0.0) lo = 0.0;
  if (hi > 1.0) hi = 1.0;
  return {lo, hi};
}

// Standard error of a binomial proportion with known success probability.
// p may sit a rounding error outside [0, 1] when it comes from a linear
// solve; the variance is clamped at zero rather than fed to sqrt.
inline double binomial_se(double p, int64_t n) {
  return n > 0 ? std::sqrt(std::max(0.0, p * (1.0 - p)) /
                           static_cast<double>(n))
               : 0.0;
}

// z-score with a safe answer when the spread is zero: a degenerate
// statistic counts as agreeing when it matches within zero_spread_atol
// (callers comparing against linear-solve output pass their solver noise
// floor) and as infinitely off otherwise.
inline double z_score(double estimate, double exact, double se,
                      double zero_spread_atol = 0.0) {
  if (se > 0.0) return (estimate - exact) / se;
  return std::abs(estimate - exact) <= zero_spread_atol
             ? 0.0
             : std::numeric_limits<double>::infinity();
}

}  // namespace cookiewalk
