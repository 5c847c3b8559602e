#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <string>

#include "lrh/error.hpp"
#include "lrh/numeric.hpp"

namespace lrh {

/// A value with a certified absolute error bound: the true quantity lies in
/// [value - error, value + error].
struct Certified {
  double value = 0.0;
  double error = 0.0;

  double lower() const { return value - error; }
  double upper() const { return value + error; }
};

enum class KernelForm { pure_power };

/// Coupling law J(k) = amplitude * k^(-alpha) on distances k >= 1.
///
/// Only the positive pure-power form is supported; sign-changing kernels would
/// need a different tail certificate and are not modelled.
class CouplingKernel {
 public:
  explicit CouplingKernel(double alpha, double amplitude = 1.0)
      : alpha_(alpha), amplitude_(amplitude) {
    detail::require(std::isfinite(alpha) && alpha > 0.0,
                    "kernel: alpha must be finite and positive");
    detail::require(std::isfinite(amplitude) && amplitude > 0.0,
                    "kernel: amplitude must be finite and positive");
  }

  double alpha() const { return alpha_; }
  double amplitude() const { return amplitude_; }
  KernelForm form() const { return KernelForm::pure_power; }
  bool summable() const { return alpha_ > 1.0; }

  /// J(k). Rejects k < 1: there is no self-interaction.
  double operator()(std::int64_t k) const {
    detail::require(k >= 1, "kernel: distance must be >= 1, got " + std::to_string(k));
    if (k == 1) return amplitude_;
    return amplitude_ * std::pow(static_cast<double>(k), -alpha_);
  }

  friend bool operator==(const CouplingKernel&, const CouplingKernel&) = default;

 private:
  double alpha_;
  double amplitude_;
};

inline double kernel_eval(const CouplingKernel& kernel, std::int64_t k) { return kernel(k); }

namespace detail {

inline void require_summable(const CouplingKernel& kernel, const char* who) {
  if (!kernel.summable())
    throw PreconditionError(std::string(who) + ": alpha must exceed 1 (divergent tail)");
}

// Euler-Maclaurin for sum_{k>=c} a k^-alpha: integral, f(c)/2 and the B2 and
// B4 corrections. f is completely monotone, so the remainder is bounded by
// the first omitted term, |B6/6! f^(5)(c)|.
inline double em_remainder_bound(double alpha, double amplitude, double cutoff) {
  return amplitude * alpha * (alpha + 1.0) * (alpha + 2.0) * (alpha + 3.0) * (alpha + 4.0) /
         30240.0 * std::pow(cutoff, -alpha - 5.0);
}

inline double em_tail(double alpha, double amplitude, double cutoff) {
  const double head = std::pow(cutoff, -alpha);
  const double c2 = cutoff * cutoff;
  return amplitude * head *
         (cutoff / (alpha - 1.0) + 0.5 + alpha / (12.0 * cutoff) -
          alpha * (alpha + 1.0) * (alpha + 2.0) / (720.0 * c2 * cutoff));
}

}  // namespace detail

/// Sum_{k >= m} J(k) to absolute precision eps.
///
/// Terms up to a cutoff are added explicitly; the remainder past the cutoff is
/// the integral plus Euler-Maclaurin corrections, with the cutoff chosen so the
/// certified remainder is <= eps/2.
inline Certified tail_sum(const CouplingKernel& kernel, std::int64_t m, double eps) {
  detail::require_summable(kernel, "tail_sum");
  detail::require(m >= 1, "tail_sum: m must be >= 1");
  detail::require(eps > 0.0, "tail_sum: eps must be positive");

  const double a = kernel.alpha();
  const double amp = kernel.amplitude();
  const double coeff = detail::em_remainder_bound(a, amp, 1.0);
  double cutoff_real = std::ceil(std::pow(coeff / (0.5 * eps), 1.0 / (a + 5.0)));
  if (!(cutoff_real >= 1.0)) cutoff_real = 1.0;
  // Keep the explicit loop bounded; the remainder formula stays certified for
  // any cutoff, the bound just has to come in under eps.
  cutoff_real = std::min(cutoff_real, 1.0e8);
  std::int64_t cutoff = std::max<std::int64_t>(m, static_cast<std::int64_t>(cutoff_real));

  const auto cut = static_cast<double>(cutoff);
  CompensatedSum sum;
  sum += detail::em_tail(a, amp, cut);
  for (std::int64_t k = cutoff - 1; k >= m; --k) sum += kernel(k);
  const double value = sum.value();
  return {value, detail::em_remainder_bound(a, amp, cut) + detail::sum_rounding(cutoff - m + 1, value)};
}

/// X(n) = sum_{|i| < n} sum_{|j| >= n} J(|i - j|): the coupling between the
/// box {|i| < n} and its complement, counted once per unordered pair.
///
/// Uses the identity X(n) = 2 [ sum_{k < 2n-1} k J(k) + (2n-1) T(2n-1) ]
/// with T the tail sum, so only one certified tail is needed.
inline Certified cross_sum(const CouplingKernel& kernel, std::int64_t n, double eps) {
  detail::require_summable(kernel, "cross_sum");
  detail::require(n >= 1, "cross_sum: n must be >= 1");
  detail::require(eps > 0.0, "cross_sum: eps must be positive");

  const std::int64_t width = 2 * n - 1;
  const auto w = static_cast<double>(width);
  const Certified tail = tail_sum(kernel, width, 0.25 * eps / w);
  CompensatedSum head;
  head += w * tail.value;
  for (std::int64_t k = width - 1; k >= 1; --k) head += static_cast<double>(k) * kernel(k);
  const double value = 2.0 * head.value();
  return {value, 2.0 * w * tail.error + detail::sum_rounding(width, value)};
}

}  // namespace lrh
