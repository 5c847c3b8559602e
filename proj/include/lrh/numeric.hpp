#pragma once

#include <cmath>
#include <cstdint>
#include <limits>

namespace lrh {

/// Neumaier compensated summation.
class CompensatedSum {
 public:
  CompensatedSum& operator+=(double x) {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x))
      compensation_ += (sum_ - t) + x;
    else
      compensation_ += (x - t) + sum_;
    sum_ = t;
    return *this;
  }

  double value() const { return sum_ + compensation_; }

 private:
  double sum_ = 0.0;
  double compensation_ = 0.0;
};

namespace detail {

// Error bound for a compensated sum of `terms` nonnegative values totalling
// `total`, each term itself carrying a few ulps of evaluation error (pow).
inline double sum_rounding(std::int64_t terms, double total) {
  constexpr double u = std::numeric_limits<double>::epsilon();
  return (8.0 + 2.0 * static_cast<double>(terms) * u) * u * std::abs(total);
}

}  // namespace detail
}  // namespace lrh
