#pragma once

// Independent brute-force references used only by the tests. Nothing here
// calls into the library's summation or energy code.

#include <cmath>
#include <cstdint>
#include <functional>
#include <vector>

namespace lrh::oracle {

// sum_{k >= m} k^-alpha bracketed by partial sums to `cutoff` plus the
// integral bounds int_N^inf <= sum_{k>=N} <= N^-alpha + int_N^inf.
struct Bracket {
  double lo = 0.0;
  double hi = 0.0;
  double mid() const { return 0.5 * (lo + hi); }
};

inline Bracket power_tail(double alpha, std::int64_t m, std::int64_t cutoff) {
  long double s = 0.0L;
  for (std::int64_t k = cutoff - 1; k >= m; --k) s += std::pow(static_cast<long double>(k), -alpha);
  const long double n = static_cast<long double>(std::max(cutoff, m));
  const long double integral = std::pow(n, 1.0L - alpha) / (alpha - 1.0L);
  return {static_cast<double>(s + integral), static_cast<double>(s + integral + std::pow(n, -alpha))};
}

// X(n) = sum_{|i|<n} sum_{|j|>=n} |i-j|^-alpha, summed pair by pair out to
// |j| < reach, with each site's remaining tail bracketed.
inline Bracket cross_double_sum(double alpha, std::int64_t n, std::int64_t reach) {
  long double lo = 0.0L, hi = 0.0L;
  for (std::int64_t i = -(n - 1); i <= n - 1; ++i) {
    long double row = 0.0L;
    for (std::int64_t j = n; j < reach; ++j) row += std::pow(static_cast<long double>(j - i), -alpha);
    for (std::int64_t j = -n; j > -reach; --j) row += std::pow(static_cast<long double>(i - j), -alpha);
    // Remaining partners: distances >= reach - i (right) and >= reach + i (left).
    for (std::int64_t start : {reach - i, reach + i}) {
      const long double s = static_cast<long double>(start);
      const long double integral = std::pow(s, 1.0L - alpha) / (alpha - 1.0L);
      lo += integral;
      hi += integral + std::pow(s, -alpha);
    }
    lo += row;
    hi += row;
  }
  return {static_cast<double>(lo), static_cast<double>(hi)};
}

// Relative energy by literal ordered-pair summation: window sites against
// every other window site and against boundary sites out to distance
// `reach`, plus a bracketed far tail (its midpoint is used).
inline double energy(const std::vector<std::int64_t>& heights, std::int64_t lo, std::int64_t omega,
                     double alpha, double p, std::int64_t reach) {
  const auto v = [p](std::int64_t x) { return std::pow(std::abs(static_cast<double>(x)), p); };
  const auto hi = lo + static_cast<std::int64_t>(heights.size()) - 1;
  long double e = 0.0L;
  for (std::int64_t i = lo; i <= hi; ++i) {
    const std::int64_t hi_ = heights[static_cast<std::size_t>(i - lo)];
    for (std::int64_t j = lo; j <= hi; ++j) {
      if (j == i) continue;
      const std::int64_t hj = heights[static_cast<std::size_t>(j - lo)];
      e += std::pow(static_cast<long double>(std::abs(i - j)), -alpha) * v(hi_ - hj);
    }
    long double outside = 0.0L;
    for (std::int64_t j = hi + 1; j < hi + reach; ++j)
      outside += std::pow(static_cast<long double>(j - i), -alpha);
    for (std::int64_t j = lo - 1; j > lo - reach; --j)
      outside += std::pow(static_cast<long double>(i - j), -alpha);
    outside += power_tail(alpha, hi + reach - i, hi + reach - i).mid();
    outside += power_tail(alpha, i - lo + reach, i - lo + reach).mid();
    // (i, j) and (j, i) both count for j outside.
    e += 2.0L * outside * v(hi_ - omega);
  }
  return static_cast<double>(e);
}

}  // namespace lrh::oracle
