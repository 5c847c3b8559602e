#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "lrh/error.hpp"
#include "lrh/kernel.hpp"
#include "lrh/numeric.hpp"

namespace lrh {

inline constexpr double kDefaultEps = 1e-10;

/// Gibbs specification: coupling kernel, inverse temperature and the exponent
/// of the potential V(x) = |x|^p.
struct ModelParams {
  CouplingKernel kernel{2.0};
  double beta = 1.0;
  double p = 2.0;

  ModelParams() = default;
  ModelParams(CouplingKernel k, double b, double exponent) : kernel(k), beta(b), p(exponent) {
    validate();
  }

  double alpha() const { return kernel.alpha(); }

  void validate() const {
    detail::require(beta > 0.0 && std::isfinite(beta), "model: beta must be positive");
    detail::require(p >= 1.0 && p <= 2.0, "model: p must lie in [1, 2]");
    detail::require(kernel.summable(), "model: alpha must exceed 1");
  }

  friend bool operator==(const ModelParams&, const ModelParams&) = default;
};

/// V(x) = |x|^p with exact integer paths for p = 1 and p = 2.
class Potential {
 public:
  explicit Potential(double p) : p_(p) {}

  double exponent() const { return p_; }

  double operator()(std::int64_t x) const {
    const auto ax = static_cast<double>(x < 0 ? -x : x);
    if (p_ == 2.0) return ax * ax;
    if (p_ == 1.0) return ax;
    if (ax == 0.0) return 0.0;
    return std::pow(ax, p_);
  }

 private:
  double p_;
};

inline double potential_eval(double p, std::int64_t x) { return Potential(p)(x); }

/// V tabulated on |x| <= max_abs, falling back to Potential beyond.
class TabulatedPotential {
 public:
  TabulatedPotential(double p, std::int64_t max_abs) : direct_(p) {
    table_.resize(static_cast<std::size_t>(max_abs) + 1);
    for (std::int64_t x = 0; x <= max_abs; ++x) table_[static_cast<std::size_t>(x)] = direct_(x);
  }

  double operator()(std::int64_t x) const {
    const auto ax = static_cast<std::uint64_t>(x < 0 ? -x : x);
    return ax < table_.size() ? table_[ax] : direct_(x);
  }

 private:
  Potential direct_;
  std::vector<double> table_;
};

/// Integer interval {lo, ..., hi}.
struct Window {
  std::int64_t lo = 0;
  std::int64_t hi = 0;

  static Window centered(std::int64_t half_width) { return {-half_width, half_width}; }

  std::size_t size() const { return static_cast<std::size_t>(hi - lo + 1); }
  bool contains(std::int64_t i) const { return i >= lo && i <= hi; }
  bool contains(const Window& other) const { return other.lo >= lo && other.hi <= hi; }
  std::size_t index(std::int64_t site) const { return static_cast<std::size_t>(site - lo); }

  friend bool operator==(const Window&, const Window&) = default;
};

/// Integer heights on a finite window, with the constant height `omega`
/// everywhere outside it.
class FieldConfig {
 public:
  FieldConfig(Window window, std::int64_t omega = 0)
      : window_(window), omega_(omega), heights_(window.size(), omega) {
    detail::require(window.hi >= window.lo, "field: empty window");
  }

  FieldConfig(Window window, std::vector<std::int64_t> heights, std::int64_t omega = 0)
      : window_(window), omega_(omega), heights_(std::move(heights)) {
    detail::require(window.hi >= window.lo, "field: empty window");
    detail::require(heights_.size() == window.size(),
                    "field: expected " + std::to_string(window.size()) + " heights, got " +
                        std::to_string(heights_.size()));
  }

  const Window& window() const { return window_; }
  std::int64_t omega() const { return omega_; }
  std::span<const std::int64_t> heights() const { return heights_; }
  std::span<std::int64_t> heights() { return heights_; }

  /// Height at any lattice site, inside the window or not.
  std::int64_t at(std::int64_t site) const {
    return window_.contains(site) ? heights_[window_.index(site)] : omega_;
  }

  void set(std::int64_t site, std::int64_t value) {
    detail::require(window_.contains(site), "field: site outside window");
    heights_[window_.index(site)] = value;
  }

  friend bool operator==(const FieldConfig&, const FieldConfig&) = default;

 private:
  Window window_;
  std::int64_t omega_;
  std::vector<std::int64_t> heights_;
};

/// a_i = t for |i| < n, 0 otherwise.
struct StepProfile {
  std::int64_t t = 0;
  std::int64_t n = 1;

  Window inner_box() const { return {-(n - 1), n - 1}; }
  std::int64_t at(std::int64_t i) const { return (i > -n && i < n) ? t : 0; }
};

/// Couplings seen by a fixed window: J(d) for in-window distances and, per
/// site, the total weight B_i = sum_{j outside} J(|i - j|) to the boundary.
class WindowCouplings {
 public:
  WindowCouplings(const CouplingKernel& kernel, Window window, double eps = kDefaultEps)
      : window_(window), pair_(window.size(), 0.0), boundary_(window.size(), 0.0) {
    detail::require_summable(kernel, "window couplings");
    const std::size_t m = window.size();
    for (std::size_t d = 1; d < m; ++d) pair_[d] = kernel(static_cast<std::int64_t>(d));

    // B_i = T(i - lo + 1) + T(hi - i + 1); all tails derive from T(m') for the
    // largest needed m' by adding explicit terms, so eps is spent once.
    const double tail_eps = 0.5 * eps / static_cast<double>(m);
    const Certified far = tail_sum(kernel, static_cast<std::int64_t>(m), tail_eps);
    std::vector<double> tails(m + 1, 0.0);  // tails[k] = T(k), k in [1, m]
    tails[m] = far.value;
    for (std::size_t k = m - 1; k >= 1; --k)
      tails[k] = tails[k + 1] + kernel(static_cast<std::int64_t>(k));
    for (std::size_t a = 0; a < m; ++a) boundary_[a] = tails[a + 1] + tails[m - a];
    error_ = 2.0 * far.error + detail::sum_rounding(static_cast<std::int64_t>(m), tails[1]);

    total_.resize(m);
    for (std::size_t a = 0; a < m; ++a) {
      CompensatedSum s;
      s += boundary_[a];
      for (std::size_t b = 0; b < m; ++b)
        if (b != a) s += pair_[a > b ? a - b : b - a];
      total_[a] = s.value();
    }
  }

  const Window& window() const { return window_; }
  std::size_t size() const { return pair_.size(); }
  /// J(d) for 1 <= d < size().
  double pair(std::size_t d) const { return pair_[d]; }
  double pair(std::size_t a, std::size_t b) const { return pair_[a > b ? a - b : b - a]; }
  /// Weight from site index a to everything outside the window.
  double boundary(std::size_t a) const { return boundary_[a]; }
  /// Sum of all couplings of site index a (window partners and boundary).
  double total(std::size_t a) const { return total_[a]; }
  /// Certified error bound on each boundary weight.
  double boundary_error() const { return error_; }

 private:
  Window window_;
  std::vector<double> pair_;
  std::vector<double> boundary_;
  std::vector<double> total_;
  double error_ = 0.0;
};

namespace detail {

inline void require_same_window(const WindowCouplings& c, const Window& w) {
  require(c.window() == w, "couplings were built for a different window");
}

inline void require_step_fits(const Window& window, const StepProfile& step) {
  require(step.n >= 1, "step: n must be >= 1");
  require(window.contains(step.inner_box()),
          "step: inner box {|i| < " + std::to_string(step.n) + "} is not inside the window [" +
              std::to_string(window.lo) + ", " + std::to_string(window.hi) + "]");
}

}  // namespace detail

/// Relative energy H(phi | omega): every ordered pair (i, j), i != j, with at
/// least one index in the window contributes J(|i-j|) V(phi_i - phi_j).
/// Pairs entirely outside the window are constant and dropped.
template <typename V>
double energy(std::span<const std::int64_t> heights, std::int64_t omega,
              const WindowCouplings& couplings, const V& potential) {
  const std::size_t m = heights.size();
  CompensatedSum e;
  for (std::size_t a = 0; a < m; ++a) {
    double row = couplings.boundary(a) * potential(heights[a] - omega);
    for (std::size_t b = a + 1; b < m; ++b)
      row += couplings.pair(b - a) * potential(heights[a] - heights[b]);
    e += row;
  }
  return 2.0 * e.value();
}

inline double energy(const FieldConfig& config, const ModelParams& params,
                     double eps = kDefaultEps) {
  const WindowCouplings couplings(params.kernel, config.window(), eps);
  return energy(config.heights(), config.omega(), couplings, Potential(params.p));
}

/// H(phi with phi_site += delta) - H(phi), site given as an index into the
/// window. O(window size).
template <typename V>
double energy_delta_at(std::span<const std::int64_t> heights, std::int64_t omega,
                       std::size_t a, std::int64_t delta, const WindowCouplings& couplings,
                       const V& potential) {
  const std::int64_t h = heights[a];
  const std::int64_t moved = h + delta;
  double d = couplings.boundary(a) * (potential(moved - omega) - potential(h - omega));
  for (std::size_t b = 0; b < heights.size(); ++b) {
    if (b == a) continue;
    d += couplings.pair(a, b) * (potential(moved - heights[b]) - potential(h - heights[b]));
  }
  return 2.0 * d;
}

inline double energy_delta(const FieldConfig& config, std::int64_t site, std::int64_t delta,
                           const ModelParams& params, double eps = kDefaultEps) {
  detail::require(config.window().contains(site),
                  "energy_delta: site " + std::to_string(site) + " is outside the window");
  const WindowCouplings couplings(params.kernel, config.window(), eps);
  return energy_delta_at(config.heights(), config.omega(), config.window().index(site), delta,
                         couplings, Potential(params.p));
}

/// (T_{t,n} phi)_i = phi_i + a_i. The inner box must lie inside the window so
/// the boundary rule is never modified.
inline FieldConfig apply_step(const FieldConfig& config, const StepProfile& step) {
  detail::require_step_fits(config.window(), step);
  FieldConfig out = config;
  const Window box = step.inner_box();
  for (std::int64_t i = box.lo; i <= box.hi; ++i) out.set(i, config.at(i) + step.t);
  return out;
}

/// log of d(nu_{t,n})/d(nu) at phi:
///   -beta * sum_{i != j} J_ij [V(phi_i + a_i - phi_j - a_j) - V(phi_i - phi_j)].
/// Only ordered pairs with exactly one index in the inner box have a_i != a_j,
/// so the sum runs over those (each unordered pair twice).
template <typename V>
double log_rn_derivative(std::span<const std::int64_t> heights, std::int64_t omega,
                         const StepProfile& step, double beta, const WindowCouplings& couplings,
                         const V& potential) {
  const Window window = couplings.window();
  const Window box = step.inner_box();
  const std::int64_t t = step.t;
  if (t == 0) return 0.0;
  const std::size_t first = window.index(box.lo);
  const std::size_t last = window.index(box.hi);
  const std::size_t m = heights.size();
  double sum = 0.0;
  for (std::size_t a = first; a <= last; ++a) {
    const std::int64_t h = heights[a];
    double row = couplings.boundary(a) * (potential(h + t - omega) - potential(h - omega));
    for (std::size_t b = 0; b < first; ++b)
      row += couplings.pair(a, b) * (potential(h + t - heights[b]) - potential(h - heights[b]));
    for (std::size_t b = last + 1; b < m; ++b)
      row += couplings.pair(a, b) * (potential(h + t - heights[b]) - potential(h - heights[b]));
    sum += row;
  }
  return -beta * 2.0 * sum;
}

inline double log_rn_derivative(const FieldConfig& config, const StepProfile& step,
                                const ModelParams& params, double eps = kDefaultEps) {
  detail::require_step_fits(config.window(), step);
  const WindowCouplings couplings(params.kernel, config.window(), eps);
  return log_rn_derivative(config.heights(), config.omega(), step, params.beta, couplings,
                           Potential(params.p));
}

}  // namespace lrh
