#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include <boost/math/distributions/students_t.hpp>

#include "lrh/error.hpp"
#include "lrh/exact.hpp"
#include "lrh/kernel.hpp"
#include "lrh/model.hpp"
#include "lrh/numeric.hpp"
#include "lrh/sampler.hpp"

namespace lrh {

struct Estimate {
  double value = 0.0;
  double se = 0.0;
};

/// M_n = (1 / 2n) sum_{|i| <= n} phi_i. Note the 2n + 1 summands over a 2n
/// divisor.
inline double ergodic_average(const FieldConfig& config, std::int64_t n) {
  detail::require(n >= 1, "ergodic_average: n must be >= 1");
  detail::require(config.window().contains(Window::centered(n)),
                  "ergodic_average: box {|i| <= " + std::to_string(n) + "} is not inside the window");
  std::int64_t sum = 0;
  for (std::int64_t i = -n; i <= n; ++i) sum += config.at(i);
  return static_cast<double>(sum) / static_cast<double>(2 * n);
}

namespace observables {

inline Observable ergodic(std::int64_t n) {
  return {"M_" + std::to_string(n), [n](const FieldConfig& c) { return ergodic_average(c, n); }};
}

}  // namespace observables

/// Integrated autocorrelation time tau = 1/2 + sum_{k=1}^{M} rho(k), with the
/// window M the smallest lag satisfying M >= c * tau(M). The variance of the
/// sample mean is then 2 tau sigma^2 / N.
inline double integrated_autocorrelation_time(std::span<const double> x, double c = 6.0) {
  const std::size_t n = x.size();
  if (n < 2) return 0.5;
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= static_cast<double>(n);
  double c0 = 0.0;
  for (double v : x) c0 += (v - mean) * (v - mean);
  c0 /= static_cast<double>(n);
  if (c0 <= 0.0) return 0.5;

  double tau = 0.5;
  for (std::size_t lag = 1; lag < n / 2; ++lag) {
    double ck = 0.0;
    for (std::size_t i = 0; i + lag < n; ++i) ck += (x[i] - mean) * (x[i + lag] - mean);
    ck /= static_cast<double>(n);
    tau += ck / c0;
    if (static_cast<double>(lag) >= c * tau) break;
  }
  return std::max(tau, 0.5);
}

/// Sample mean with an autocorrelation-corrected standard error.
inline Estimate mean_estimate(std::span<const double> x, double* tau_out = nullptr) {
  detail::require(!x.empty(), "estimate: empty series");
  const auto n = static_cast<double>(x.size());
  CompensatedSum s;
  for (double v : x) s += v;
  const double mean = s.value() / n;
  double var = 0.0;
  for (double v : x) var += (v - mean) * (v - mean);
  var /= n;
  const double tau = integrated_autocorrelation_time(x);
  if (tau_out) *tau_out = tau;
  return {mean, std::sqrt(std::max(0.0, 2.0 * tau * var / n))};
}

struct MomentReport {
  Estimate mean;           // <phi_0>
  Estimate mean_abs;       // <|phi_0|>
  Estimate second_moment;  // <phi_0^2>
  double autocorrelation_time = 0.5;
};

/// Moments of the height series `name` (sampler path).
inline MomentReport moments(const RunRecord& record, const std::string& name = "phi_0") {
  const auto& x = record.series_for(name);
  detail::require(!x.empty(), "moments: empty series");
  std::vector<double> absx(x.size()), sq(x.size());
  for (std::size_t k = 0; k < x.size(); ++k) {
    absx[k] = std::abs(x[k]);
    sq[k] = x[k] * x[k];
  }
  MomentReport r;
  r.mean = mean_estimate(x, &r.autocorrelation_time);
  r.mean_abs = mean_estimate(absx);
  r.second_moment = mean_estimate(sq);
  return r;
}

/// Exact moments of the height at `site` (oracle path); errors are zero.
inline MomentReport moments(const ExactDistribution& dist, std::int64_t site = 0) {
  detail::require(dist.window.contains(site), "moments: site outside the window");
  const std::size_t a = dist.window.index(site);
  MomentReport r;
  r.mean.value = moment(dist, [a](auto h) { return static_cast<double>(h[a]); });
  r.mean_abs.value = moment(dist, [a](auto h) { return std::abs(static_cast<double>(h[a])); });
  r.second_moment.value = moment(dist, [a](auto h) {
    const auto v = static_cast<double>(h[a]);
    return v * v;
  });
  return r;
}

/// C2 in the pointwise bound V(x + a) - V(x) <= C1-term + C2 |a|^p:
/// 1 for p = 2 (exact expansion), 2^(p-1) otherwise.
inline double re_bound_c2(double p) { return p == 2.0 ? 1.0 : std::pow(2.0, p - 1.0); }

/// beta * 2 X(n) * (C1 + C2 |t|^p): the entropy bound in its exact
/// pre-asymptotic form, X(n) being the cross-boundary coupling sum.
inline double re_bound_eval(const ModelParams& params, std::int64_t t, std::int64_t n, double c1,
                            double eps = kDefaultEps) {
  params.validate();
  detail::require(c1 >= 0.0, "re_bound_eval: C1 must be nonnegative");
  const double x = cross_sum(params.kernel, n, eps).value;
  return params.beta * 2.0 * x * (c1 + re_bound_c2(params.p) * Potential(params.p)(t));
}

/// (2^(p-1) - 1) * max over cross-boundary pairs of <(phi_i - phi_j)^2>^(p/2).
/// By Jensen (p <= 2) this dominates every <|phi_i - phi_j|^p>. Zero for
/// p in {1, 2}.
inline double oracle_c1(const ExactDistribution& dist, const StepProfile& step) {
  const double p = dist.params.p;
  if (p == 1.0 || p == 2.0) return 0.0;
  detail::require_step_fits(dist.window, step);
  const Window w = dist.window;
  const Window box = step.inner_box();
  double worst = 0.0;
  for (std::int64_t i = box.lo; i <= box.hi; ++i) {
    const std::size_t a = w.index(i);
    // Partner outside the window: height omega.
    worst = std::max(worst, moment(dist, [&](auto h) {
                       const auto d = static_cast<double>(h[a] - dist.omega);
                       return d * d;
                     }));
    for (std::int64_t j = w.lo; j <= w.hi; ++j) {
      if (box.contains(j)) continue;
      const std::size_t b = w.index(j);
      worst = std::max(worst, moment(dist, [&](auto h) {
                         const auto d = static_cast<double>(h[a] - h[b]);
                         return d * d;
                       }));
    }
  }
  return (std::pow(2.0, p - 1.0) - 1.0) * std::pow(worst, 0.5 * p);
}

struct ReLedger {
  std::int64_t n = 1;
  std::int64_t t = 0;
  double formula_value = 0.0;
  double bound_value = 0.0;
  double c1 = 0.0;
  double c2 = 1.0;
  /// Certified numerical error on the comparison (tails and rounding).
  double error = 0.0;
  bool holds = true;
};

/// Pairs the formula-level relative entropy RE(nu | nu_{t,n}) with its bound.
inline ReLedger re_ledger(const ExactDistribution& dist, const StepProfile& step) {
  detail::require_step_fits(dist.window, step);
  const ModelParams& params = dist.params;
  ReLedger l;
  l.n = step.n;
  l.t = step.t;
  // With t = 0 nothing is shifted and the increment inequality is not used.
  l.c1 = step.t == 0 ? 0.0 : oracle_c1(dist, step);
  l.c2 = re_bound_c2(params.p);
  l.formula_value = re_via_formula(dist, step);

  const Certified x = cross_sum(params.kernel, step.n, dist.eps);
  const double amplitude = l.c1 + l.c2 * Potential(params.p)(step.t);
  l.bound_value = params.beta * 2.0 * x.value * amplitude;

  const WindowCouplings couplings(params.kernel, dist.window, dist.eps);
  const double max_dv =
      Potential(params.p)(2 * dist.kmax + std::abs(dist.omega) + std::abs(step.t));
  l.error = params.beta * 2.0 * static_cast<double>(2 * step.n - 1) *
                couplings.boundary_error() * max_dv +
            params.beta * 2.0 * x.error * amplitude +
            64.0 * std::numeric_limits<double>::epsilon() *
                (std::abs(l.formula_value) + std::abs(l.bound_value));
  l.holds = l.formula_value <= l.bound_value + l.error;
  return l;
}

/// Monte-Carlo relative entropy: minus the mean of a log-RN-derivative series.
inline Estimate re_mc_estimate(const RunRecord& record, const std::string& name = "log_rn") {
  detail::require(record.has(name), "re_mc_estimate: record has no '" + name + "' series");
  const Estimate e = mean_estimate(record.series_for(name));
  return {-e.value, e.se};
}

struct ExponentFit {
  std::vector<double> xs;
  std::vector<double> ys;
  double slope = 0.0;
  double intercept = 0.0;
  double slope_se = 0.0;
  double ci_lo = 0.0;
  double ci_hi = 0.0;
  double r2 = 1.0;
};

/// Least squares on (log x, log y). The confidence interval is
/// slope +- t_{n-2} * se at the given level.
inline ExponentFit fit_exponent(std::span<const double> xs, std::span<const double> ys,
                                double level = 0.95) {
  detail::require(xs.size() == ys.size(), "fit_exponent: xs and ys differ in length");
  detail::require(xs.size() >= 4, "fit_exponent: need at least 4 points");
  for (std::size_t k = 0; k < xs.size(); ++k) {
    detail::require(xs[k] > 0.0, "fit_exponent: sizes must be positive");
    detail::require(ys[k] > 0.0, "fit_exponent: statistics must be positive");
  }
  ExponentFit fit;
  fit.xs.assign(xs.begin(), xs.end());
  fit.ys.assign(ys.begin(), ys.end());
  const std::size_t n = xs.size();
  std::vector<double> lx(n), ly(n);
  for (std::size_t k = 0; k < n; ++k) {
    lx[k] = std::log(xs[k]);
    ly[k] = std::log(ys[k]);
  }
  double mx = 0.0, my = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    mx += lx[k];
    my += ly[k];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    sxx += (lx[k] - mx) * (lx[k] - mx);
    sxy += (lx[k] - mx) * (ly[k] - my);
    syy += (ly[k] - my) * (ly[k] - my);
  }
  detail::require(sxx > 0.0, "fit_exponent: sizes must not all be equal");
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double sse = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double r = ly[k] - (fit.intercept + fit.slope * lx[k]);
    sse += r * r;
  }
  fit.r2 = syy > 0.0 ? std::max(0.0, 1.0 - sse / syy) : 1.0;
  const auto dof = static_cast<double>(n - 2);
  fit.slope_se = std::sqrt(sse / dof / sxx);
  const boost::math::students_t dist(dof);
  const double q = boost::math::quantile(dist, 0.5 + 0.5 * level);
  fit.ci_lo = fit.slope - q * fit.slope_se;
  fit.ci_hi = fit.slope + q * fit.slope_se;
  return fit;
}

inline ExponentFit fit_exponent(const std::vector<double>& xs, const std::vector<double>& ys,
                                double level = 0.95) {
  return fit_exponent(std::span<const double>(xs), std::span<const double>(ys), level);
}

struct ProfilePoint {
  std::int64_t n = 0;
  double variance = 0.0;
  double se = 0.0;
  double autocorrelation_time = 0.5;
  double acceptance_rate = 0.0;
};

/// Seed for the chain of size n within a profile started from `seed`
/// (splitmix64 finaliser).
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t n) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (n + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Centered second moment of phi_0 with its error bar, from the series of a
/// run record.
inline ProfilePoint centered_variance(const RunRecord& record, const std::string& name = "phi_0") {
  const auto& x = record.series_for(name);
  detail::require(!x.empty(), "variance: empty series");
  const Estimate m = mean_estimate(x);
  std::vector<double> dev(x.size());
  for (std::size_t k = 0; k < x.size(); ++k) dev[k] = (x[k] - m.value) * (x[k] - m.value);
  ProfilePoint pt;
  const Estimate v = mean_estimate(dev, &pt.autocorrelation_time);
  pt.variance = v.value;
  pt.se = v.se;
  pt.acceptance_rate = record.acceptance_rate;
  return pt;
}

struct ProfileOptions {
  ProposalLaw proposal;
  ChainOptions chain;
  unsigned threads = 1;
};

/// For each n runs a chain on {-n, ..., n} with zero boundary and reports
/// Var(phi_0). Chains are independent; results come back ordered by n.
inline std::vector<ProfilePoint> variance_profile(const ModelParams& params,
                                                  const std::vector<std::int64_t>& sizes,
                                                  const Schedule& schedule, std::uint64_t seed,
                                                  const ProfileOptions& options = {}) {
  detail::require(!sizes.empty(), "variance_profile: no sizes");
  for (std::size_t k = 0; k < sizes.size(); ++k) {
    detail::require(sizes[k] >= 1, "variance_profile: sizes must be >= 1");
    if (k > 0) detail::require(sizes[k] > sizes[k - 1], "variance_profile: sizes must increase");
  }
  std::vector<ProfilePoint> out(sizes.size());
  auto run_one = [&](std::size_t k) {
    const std::int64_t n = sizes[k];
    const RunRecord rec =
        run_chain(params, Window::centered(n), 0, options.proposal, schedule,
                  {observables::height(0)}, derive_seed(seed, static_cast<std::uint64_t>(n)),
                  options.chain);
    out[k] = centered_variance(rec);
    out[k].n = n;
  };
  const unsigned threads = std::max(1u, options.threads);
  if (threads == 1) {
    for (std::size_t k = 0; k < sizes.size(); ++k) run_one(k);
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < threads; ++w)
      pool.emplace_back([&, w] {
        for (std::size_t k = w; k < sizes.size(); k += threads) run_one(k);
      });
  }
  return out;
}

}  // namespace lrh
