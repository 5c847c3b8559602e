#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "lrh/analysis.hpp"
#include "oracle.hpp"

using namespace lrh;

namespace {

ModelParams params(double alpha, double beta, double p) {
  return ModelParams(CouplingKernel(alpha), beta, p);
}

}  // namespace

TEST(ErgodicAverage, LiteralNormalization) {
  EXPECT_EQ(ergodic_average(FieldConfig(Window{-3, 3}), 2), 0.0);
  EXPECT_EQ(ergodic_average(FieldConfig(Window{-1, 1}, {1, 1, 1}), 1), 1.5);
  EXPECT_EQ(ergodic_average(FieldConfig(Window{-2, 2}, {1, 2, 3, 4, 5}), 2), 15.0 / 4.0);
}

TEST(ErgodicAverage, RejectsBoxOutsideWindow) {
  EXPECT_THROW(ergodic_average(FieldConfig(Window{-2, 1}), 2), PreconditionError);
  EXPECT_THROW(ergodic_average(FieldConfig(Window{-2, 2}), 0), PreconditionError);
}

TEST(Autocorrelation, IndependentAndAr1) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> g;
  std::vector<double> iid(200'000), ar(200'000);
  double x = 0.0;
  const double rho = 0.8;
  for (std::size_t k = 0; k < iid.size(); ++k) {
    iid[k] = g(rng);
    x = rho * x + std::sqrt(1 - rho * rho) * g(rng);
    ar[k] = x;
  }
  EXPECT_NEAR(integrated_autocorrelation_time(iid), 0.5, 0.05);
  // tau_int = (1 + rho) / (2 (1 - rho)) = 4.5
  EXPECT_NEAR(integrated_autocorrelation_time(ar), 4.5, 0.4);
  EXPECT_EQ(integrated_autocorrelation_time(std::vector<double>(50, 2.0)), 0.5);
}

TEST(Moments, ConstantSeries) {
  RunRecord rec;
  rec.names = {"phi_0"};
  rec.series = {std::vector<double>(100, -3.0)};
  const auto m = moments(rec);
  EXPECT_EQ(m.mean_abs.value, 3.0);
  EXPECT_EQ(m.mean_abs.se, 0.0);
  EXPECT_EQ(m.second_moment.value, 9.0);
  EXPECT_EQ(m.second_moment.se, 0.0);
}

TEST(Moments, EmptyOrMissingSeries) {
  RunRecord rec;
  rec.names = {"phi_0"};
  rec.series = {{}};
  EXPECT_THROW(moments(rec), PreconditionError);
  EXPECT_THROW(moments(rec, "phi_9"), PreconditionError);
}

TEST(Moments, OraclePathExactAndJensen) {
  const auto d = enumerate(Window{-1, 1}, 6, 0, params(2.5, 0.4, 2.0));
  const auto m = moments(d, 0);
  EXPECT_NEAR(m.mean.value, 0.0, 1e-15);
  EXPECT_EQ(m.mean_abs.se, 0.0);
  EXPECT_GT(m.second_moment.value, m.mean_abs.value * m.mean_abs.value);
  // Independent summation order: walk the table by decoded ids, backwards.
  double direct = 0.0;
  std::vector<std::int64_t> h(3);
  for (std::size_t id = d.states(); id-- > 0;) {
    d.decode(id, h);
    direct += d.table[id] * std::abs(static_cast<double>(h[1]));
  }
  EXPECT_NEAR(m.mean_abs.value, direct, 1e-14);
}

TEST(Moments, SamplerAgreesWithOracle) {
  const auto mp = params(2.5, 0.6, 1.5);
  const auto exact = moments(enumerate(Window{-1, 1}, 8, 0, mp), 0);
  const auto rec = run_chain(mp, Window{-1, 1}, 0, ProposalLaw::unit(), {1000, 400'000, 1},
                             {observables::height(0)}, 77);
  const auto est = moments(rec);
  EXPECT_NEAR(est.mean_abs.value, exact.mean_abs.value, 3 * est.mean_abs.se);
  EXPECT_NEAR(est.second_moment.value, exact.second_moment.value, 3 * est.second_moment.se);
}

TEST(ReBound, Values) {
  EXPECT_EQ(re_bound_eval(params(2.5, 1.0, 2.0), 0, 3, 0.0), 0.0);
  EXPECT_NEAR(re_bound_eval(params(2.0, 1.0, 2.0), 2, 1, 0.0),
              8.0 * std::numbers::pi * std::numbers::pi / 3.0, 1e-8);
  EXPECT_NEAR(re_bound_eval(params(2.0, 1.0, 2.0), 2, 1, 0.0), 26.318945, 1e-6);
  EXPECT_THROW(re_bound_eval(params(2.0, 1.0, 2.0), 1, 1, -1.0), PreconditionError);
}

TEST(ReBound, MonotoneInStepAndC1) {
  for (double p : {1.0, 1.5, 2.0}) {
    const auto mp = params(2.3, 0.7, p);
    double prev = -1.0;
    for (std::int64_t t = 0; t < 6; ++t) {
      const double b = re_bound_eval(mp, t, 2, 0.3);
      EXPECT_GE(b, prev);
      prev = b;
    }
    EXPECT_LE(re_bound_eval(mp, 2, 2, 0.1), re_bound_eval(mp, 2, 2, 0.2));
  }
}

TEST(ReBound, ConvergesInBoxSizeAboveTwo) {
  const auto mp = params(2.5, 1.0, 2.0);
  std::vector<double> b;
  for (std::int64_t n = 4; n <= 4096; n *= 2) b.push_back(re_bound_eval(mp, 2, n, 0.0));
  for (std::size_t k = 1; k < b.size(); ++k) EXPECT_GE(b[k], b[k - 1]);
  // Increments decay geometrically (ratio 2^{-1/2}), so the sequence is Cauchy.
  for (std::size_t k = 2; k < b.size(); ++k)
    EXPECT_NEAR((b[k] - b[k - 1]) / (b[k - 1] - b[k - 2]), std::pow(2.0, -0.5), 0.05);
  const double tail = (b.back() - b[b.size() - 2]) / (std::sqrt(2.0) - 1.0);
  EXPECT_LT(tail / b.back(), 0.01);
}

TEST(ReLedger, ZeroStep) {
  const auto d = enumerate(Window{-2, 2}, 3, 0, params(2.5, 1.0, 1.5));
  const auto l = re_ledger(d, {0, 2});
  EXPECT_EQ(l.formula_value, 0.0);
  EXPECT_EQ(l.bound_value, 0.0);
  EXPECT_TRUE(l.holds);
}

TEST(ReLedger, TightForQuadratic) {
  const auto d = enumerate(Window{-2, 2}, 5, 0, params(2.5, 1.0, 2.0));
  for (std::int64_t n : {1, 2, 3})
    for (std::int64_t t : {1, 2, 3}) {
      const auto l = re_ledger(d, {t, n});
      EXPECT_EQ(l.c1, 0.0);
      EXPECT_EQ(l.c2, 1.0);
      EXPECT_NEAR(l.formula_value, l.bound_value, 1e-8);
      EXPECT_TRUE(l.holds);
    }
}

TEST(ReLedger, StrictForIntermediateExponent) {
  const auto d = enumerate(Window{-2, 2}, 4, 0, params(2.5, 1.0, 1.5));
  for (std::int64_t t : {1, 2}) {
    const auto l = re_ledger(d, {t, 2});
    EXPECT_GT(l.c1, 0.0);
    EXPECT_LT(l.formula_value, l.bound_value);
    EXPECT_TRUE(l.holds);
  }
}

TEST(ReLedger, C1DominatesPthMoments) {
  // C1 / (2^{p-1} - 1) must dominate <|phi_i - phi_j|^p> on every cross pair.
  const double p = 1.5;
  const auto d = enumerate(Window{-2, 2}, 4, 0, params(2.5, 0.5, p));
  const StepProfile s{1, 2};
  const double c1 = oracle_c1(d, s) / (std::pow(2.0, p - 1) - 1);
  for (std::size_t a : {1u, 2u, 3u})
    for (std::size_t b : {0u, 4u}) {
      const double m = moment(d, [&](auto h) { return std::pow(std::abs(static_cast<double>(h[a] - h[b])), p); });
      EXPECT_LE(m, c1);
    }
}

TEST(ReMc, ZeroStepHasZeroVariance) {
  const auto mp = params(2.5, 1.0, 2.0);
  const auto rec = run_chain(mp, Window{-2, 2}, 0, ProposalLaw::unit(), {10, 200, 1},
                             {observables::log_rn({0, 2}, mp, Window{-2, 2})}, 1);
  const auto e = re_mc_estimate(rec);
  EXPECT_EQ(e.value, 0.0);
  EXPECT_EQ(e.se, 0.0);
}

TEST(ReMc, MissingObservable) {
  const auto rec = run_chain(params(2.5, 1.0, 2.0), Window{-2, 2}, 0, ProposalLaw::unit(),
                             {10, 20, 1}, {observables::height(0)}, 1);
  EXPECT_THROW(re_mc_estimate(rec), PreconditionError);
}

TEST(ReMc, AgreesWithFormulaOnTinyInstances) {
  for (double p : {1.0, 1.5, 2.0}) {
    const auto mp = params(2.5, 0.8, p);
    const Window w{-2, 2};
    const StepProfile step{2, 2};
    const double exact = re_via_formula(enumerate(w, 8, 0, mp), step);
    const auto rec = run_chain(mp, w, 0, ProposalLaw::unit(), {1000, 200'000, 2},
                               {observables::log_rn(step, mp, w)}, 31);
    const auto est = re_mc_estimate(rec);
    EXPECT_NEAR(est.value, exact, 3 * est.se) << p;
  }
}

TEST(ReMc, QuadraticSamplesFluctuateAroundTheIdentity) {
  const auto mp = params(2.5, 0.5, 2.0);
  const Window w{-2, 2};
  const StepProfile step{1, 2};
  const auto rec = run_chain(mp, w, 0, ProposalLaw::unit(), {1000, 200'000, 2},
                             {observables::log_rn(step, mp, w)}, 5);
  const auto& xs = rec.series_for("log_rn");
  double lo = xs[0], hi = xs[0];
  for (double v : xs) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  EXPECT_GT(hi - lo, 0.1);
  const auto est = re_mc_estimate(rec);
  const double identity = 0.5 * 2.0 * cross_sum(mp.kernel, 2, 1e-12).value;
  EXPECT_NEAR(est.value, identity, 3 * est.se);
}

TEST(ReMc, ErrorShrinksWithRunLength) {
  const auto mp = params(2.5, 0.8, 1.5);
  const Window w{-2, 2};
  const StepProfile step{1, 2};
  const double exact = re_via_formula(enumerate(w, 8, 0, mp), step);
  std::vector<double> rms;
  for (std::uint64_t sweeps : {5'000u, 10'000u, 20'000u, 40'000u}) {
    double ss = 0.0;
    for (std::uint64_t seed = 0; seed < 24; ++seed) {
      const auto rec = run_chain(mp, w, 0, ProposalLaw::unit(), {500, sweeps, 1},
                                 {observables::log_rn(step, mp, w)}, 1000 + seed);
      const double err = re_mc_estimate(rec).value - exact;
      ss += err * err;
    }
    rms.push_back(std::sqrt(ss / 24));
  }
  EXPECT_LT(rms.back(), rms.front());
  EXPECT_LT(rms[3], 0.8 * rms[1]);
}

TEST(FitExponent, ExactPowerLaws) {
  const std::vector<double> xs{2, 4, 8, 16, 32};
  const auto f = fit_exponent(xs, xs);
  EXPECT_NEAR(f.slope, 1.0, 1e-14);
  EXPECT_NEAR(f.r2, 1.0, 1e-14);
  for (double c : {0.01, 1.0, 250.0}) {
    std::vector<double> ys;
    for (double x : xs) ys.push_back(c * std::sqrt(x));
    EXPECT_NEAR(fit_exponent(xs, ys).slope, 0.5, 1e-14);
  }
}

TEST(FitExponent, ScaleAndReindexInvariance) {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(0.5, 2.0);
  for (int rep = 0; rep < 200; ++rep) {
    std::vector<double> xs, ys;
    for (int k = 0; k < 6; ++k) {
      xs.push_back(std::pow(2.0, k + 3));
      ys.push_back(u(rng) * std::pow(xs.back(), 0.7));
    }
    const auto base = fit_exponent(xs, ys);
    const double c = u(rng) * 10;
    auto scaled = ys;
    for (auto& y : scaled) y *= c;
    EXPECT_NEAR(fit_exponent(xs, scaled).slope, base.slope, 1e-12);
    auto rx = xs;
    for (auto& x : rx) x *= 3.0;
    EXPECT_NEAR(fit_exponent(rx, ys).slope, base.slope, 1e-12);
    EXPECT_LE(base.ci_lo, base.slope);
    EXPECT_GE(base.ci_hi, base.slope);
  }
}

TEST(FitExponent, Errors) {
  EXPECT_THROW(fit_exponent(std::vector<double>{1, 2, 3}, std::vector<double>{1, 2, 3}), PreconditionError);
  EXPECT_THROW(fit_exponent(std::vector<double>{1, 2, 3, 4}, std::vector<double>{1, 0, 3, 4}), PreconditionError);
  EXPECT_THROW(fit_exponent(std::vector<double>{1, 2, 3, 4}, std::vector<double>{1, 2, 3}), PreconditionError);
}

TEST(FitExponent, CrossSumIncrementsSubcritical) {
  // X(n+1) - X(n) decays like n^{1-alpha}; the increments from the closed form
  // and from brute-force double sums give the same slope.
  const double alpha = 1.5;
  std::vector<double> ns, fast, brute;
  for (std::int64_t n = 4; n <= 32; n *= 2) {
    ns.push_back(static_cast<double>(n));
    fast.push_back(cross_sum(CouplingKernel(alpha), n + 1, 1e-11).value -
                   cross_sum(CouplingKernel(alpha), n, 1e-11).value);
    brute.push_back(oracle::cross_double_sum(alpha, n + 1, 40'000).mid() -
                    oracle::cross_double_sum(alpha, n, 40'000).mid());
  }
  const auto ff = fit_exponent(ns, fast);
  EXPECT_NEAR(ff.slope, fit_exponent(ns, brute).slope, 1e-3);
  EXPECT_NEAR(ff.slope, 1.0 - alpha, 0.05);
}

TEST(VarianceProfile, GrowsAtHighTemperature) {
  const auto mp = params(2.5, 0.05, 2.0);
  ProfileOptions opt;
  opt.proposal = ProposalLaw::geometric(0.5);
  const std::vector<std::int64_t> sizes{1, 2, 4, 8};
  const auto prof = variance_profile(mp, sizes, {2000, 100'000, 2}, 9, opt);
  ASSERT_EQ(prof.size(), 4u);
  for (std::size_t k = 1; k < prof.size(); ++k) {
    EXPECT_EQ(prof[k].n, sizes[k]);
    EXPECT_GT(prof[k].variance - prof[k - 1].variance,
              2.0 * std::hypot(prof[k].se, prof[k - 1].se));
  }
  const auto exact = moments(enumerate(Window{-1, 1}, 12, 0, mp), 0);
  EXPECT_NEAR(prof[0].variance, exact.second_moment.value, 3 * prof[0].se);
}

TEST(VarianceProfile, SmallButPositiveWhenCold) {
  const auto mp = params(3.5, 2.0, 2.0);
  const auto prof = variance_profile(mp, {1}, {1000, 1'000'000, 1}, 4);
  const auto exact = moments(enumerate(Window{-1, 1}, 4, 0, mp), 0);
  EXPECT_GT(exact.second_moment.value, 0.0);
  EXPECT_LT(exact.second_moment.value, 1e-2);
  EXPECT_GT(prof[0].variance, 0.0);
  EXPECT_LT(prof[0].variance, 1e-2);
  EXPECT_NEAR(prof[0].variance, exact.second_moment.value, 3 * prof[0].se);
}

TEST(VarianceProfile, DeterministicAndOrdered) {
  const auto mp = params(3.0, 0.5, 2.0);
  ProfileOptions threaded;
  threaded.threads = 2;
  const auto a = variance_profile(mp, {2, 3, 5}, {100, 2000, 1}, 12);
  const auto b = variance_profile(mp, {2, 3, 5}, {100, 2000, 1}, 12, threaded);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t k = 0; k < a.size(); ++k) {
    EXPECT_EQ(a[k].n, b[k].n);
    EXPECT_EQ(a[k].variance, b[k].variance);
    EXPECT_EQ(a[k].se, b[k].se);
  }
  EXPECT_THROW(variance_profile(mp, {3, 2}, {1, 1, 1}, 1), PreconditionError);
}
