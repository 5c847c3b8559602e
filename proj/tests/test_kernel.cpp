#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "lrh/analysis.hpp"
#include "lrh/kernel.hpp"
#include "oracle.hpp"

using namespace lrh;

namespace {

constexpr double kZeta3 = 1.2020569031595942;

}  // namespace

TEST(Kernel, EvalPurePower) {
  EXPECT_DOUBLE_EQ(kernel_eval(CouplingKernel(2.0), 1), 1.0);
  EXPECT_DOUBLE_EQ(kernel_eval(CouplingKernel(2.0), 2), 0.25);
  EXPECT_DOUBLE_EQ(kernel_eval(CouplingKernel(2.5), 4), 0.03125);
  EXPECT_DOUBLE_EQ(kernel_eval(CouplingKernel(2.5, 3.0), 4), 3.0 * 0.03125);
}

TEST(Kernel, RejectsSelfInteraction) {
  EXPECT_THROW(kernel_eval(CouplingKernel(2.0), 0), PreconditionError);
  EXPECT_THROW(kernel_eval(CouplingKernel(2.0), -3), PreconditionError);
  EXPECT_THROW(CouplingKernel(2.0, 0.0), PreconditionError);
}

TEST(Kernel, PositiveMonotoneAndDominated) {
  for (double alpha : {1.1, 1.5, 2.0, 2.5, 3.5}) {
    const CouplingKernel k(alpha, 1.7);
    double prev = k(1);
    for (std::int64_t d = 1; d < 2000; ++d) {
      const double j = k(d);
      EXPECT_GT(j, 0.0);
      EXPECT_LE(j, prev);
      EXPECT_LE(j, 1.7 * std::pow(static_cast<double>(d), -alpha) * (1 + 1e-15));
      prev = j;
    }
  }
}

TEST(TailSum, MatchesZetaValues) {
  const auto z2 = tail_sum(CouplingKernel(2.0), 1, 1e-9);
  EXPECT_LE(z2.error, 1e-9);
  EXPECT_NEAR(z2.value, std::numbers::pi * std::numbers::pi / 6.0, 1e-9);
  EXPECT_LE(z2.lower(), std::numbers::pi * std::numbers::pi / 6.0);
  EXPECT_GE(z2.upper(), std::numbers::pi * std::numbers::pi / 6.0);

  const auto z3 = tail_sum(CouplingKernel(3.0), 1, 1e-9);
  EXPECT_NEAR(z3.value, kZeta3, 1e-9);
  EXPECT_LE(z3.lower(), kZeta3);
  EXPECT_GE(z3.upper(), kZeta3);

  const auto from2 = tail_sum(CouplingKernel(2.0), 2, 1e-9);
  EXPECT_NEAR(from2.value, std::numbers::pi * std::numbers::pi / 6.0 - 1.0, 1e-9);
}

TEST(TailSum, AgreesWithBracketedPartialSums) {
  for (double alpha : {1.3, 1.5, 2.0, 2.5, 3.0, 4.0}) {
    for (std::int64_t m : {1, 2, 7, 100, 5000}) {
      const auto ref = oracle::power_tail(alpha, m, 200'000);
      const auto got = tail_sum(CouplingKernel(alpha), m, 1e-10);
      // The oracle bracket must intersect the certified interval.
      EXPECT_LE(got.lower(), ref.hi + 1e-12) << alpha << " " << m;
      EXPECT_GE(got.upper(), ref.lo - 1e-12) << alpha << " " << m;
    }
  }
}

TEST(TailSum, TelescopesToKernel) {
  const CouplingKernel k(2.3);
  for (std::int64_t m = 1; m < 200; m += 7) {
    const auto a = tail_sum(k, m, 1e-12);
    const auto b = tail_sum(k, m + 1, 1e-12);
    EXPECT_NEAR(a.value - b.value, k(m), a.error + b.error + 1e-15);
  }
}

TEST(TailSum, RejectsDivergentAndBadArgs) {
  EXPECT_THROW(tail_sum(CouplingKernel(1.0), 1, 1e-9), PreconditionError);
  EXPECT_THROW(tail_sum(CouplingKernel(0.5), 1, 1e-9), PreconditionError);
  EXPECT_THROW(tail_sum(CouplingKernel(2.0), 0, 1e-9), PreconditionError);
  EXPECT_THROW(tail_sum(CouplingKernel(2.0), 1, 0.0), PreconditionError);
  EXPECT_THROW(cross_sum(CouplingKernel(1.0), 4, 1e-9), PreconditionError);
  EXPECT_THROW(cross_sum(CouplingKernel(2.0), 0, 1e-9), PreconditionError);
}

TEST(CrossSum, SingleSiteBox) {
  const auto x = cross_sum(CouplingKernel(2.0), 1, 1e-9);
  EXPECT_NEAR(x.value, std::numbers::pi * std::numbers::pi / 3.0, 1e-9);
}

TEST(CrossSum, MatchesBruteForceDoubleSum) {
  for (double alpha : {1.5, 2.0, 2.5, 3.0}) {
    for (std::int64_t n : {1, 2, 3, 8, 32}) {
      const auto ref = oracle::cross_double_sum(alpha, n, 20'000);
      const auto got = cross_sum(CouplingKernel(alpha), n, 1e-9);
      EXPECT_LE(got.lower(), ref.hi + 1e-12) << alpha << " " << n;
      EXPECT_GE(got.upper(), ref.lo - 1e-12) << alpha << " " << n;
    }
  }
}

TEST(CrossSum, IncrementsShrinkAboveTwo) {
  const CouplingKernel k(2.5);
  const double x16 = cross_sum(k, 16, 1e-6).value;
  const double x32 = cross_sum(k, 32, 1e-6).value;
  const double x64 = cross_sum(k, 64, 1e-6).value;
  EXPECT_GT(x64, x32);
  EXPECT_LT(x64 - x32, x32 - x16);
}

TEST(CrossSum, BoundedAboveTwo) {
  const CouplingKernel k(2.5);
  const double last = cross_sum(k, 4096, 1e-9).value;
  double sup = 0.0;
  for (std::int64_t n = 1; n <= 4096; n *= 2) sup = std::max(sup, cross_sum(k, n, 1e-9).value);
  EXPECT_LE(sup, 1.01 * last);
}

TEST(CrossSum, SubcriticalScaling) {
  // Exponent reference from brute-force double sums at small sizes, checked
  // against the closed-form path on the full range.
  std::vector<double> ns, brute, fast;
  for (std::int64_t n = 4; n <= 32; n *= 2) {
    ns.push_back(static_cast<double>(n));
    brute.push_back(oracle::cross_double_sum(1.5, n, 20'000).mid());
    fast.push_back(cross_sum(CouplingKernel(1.5), n, 1e-9).value);
  }
  const auto fb = fit_exponent(ns, brute);
  const auto ff = fit_exponent(ns, fast);
  EXPECT_NEAR(fb.slope, ff.slope, 1e-4);

  std::vector<double> xs, ys;
  for (std::int64_t n = 16; n <= 4096; n *= 2) {
    xs.push_back(static_cast<double>(n));
    ys.push_back(cross_sum(CouplingKernel(1.5), n, 1e-9).value);
  }
  EXPECT_NEAR(fit_exponent(xs, ys).slope, 0.5, 0.05);
}

TEST(CrossSum, LogarithmicAtTwo) {
  const CouplingKernel k(2.0);
  double first = 0.0;
  for (std::int64_t n = 16; n <= 2048; n *= 2) {
    const double inc = cross_sum(k, 2 * n, 1e-9).value - cross_sum(k, n, 1e-9).value;
    if (first == 0.0) first = inc;
    EXPECT_NEAR(inc, first, 0.05 * first);
    EXPECT_NEAR(inc, 2.0 * std::log(2.0), 0.05);
  }
}
