#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <ostream>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "lrh/error.hpp"
#include "lrh/io.hpp"
#include "lrh/model.hpp"
#include "lrh/numeric.hpp"

namespace lrh {

/// Finite-volume Gibbs measure on a window, restricted to heights in
/// {-kmax, ..., kmax}, stored as an explicit probability table.
///
/// Configuration ids are mixed-radix with the leftmost site least
/// significant: id = sum_a (phi_a + kmax) * (2 kmax + 1)^a.
struct ExactDistribution {
  Window window;
  std::int64_t kmax = 0;
  std::int64_t omega = 0;
  ModelParams params;
  double eps = kDefaultEps;
  std::vector<double> table;
  double log_z = 0.0;
  /// Total probability of configurations touching the truncation (any
  /// |phi_i| = kmax). Serves as the truncation certificate.
  double boundary_layer_mass = 0.0;

  std::size_t radix() const { return static_cast<std::size_t>(2 * kmax + 1); }
  std::size_t states() const { return table.size(); }

  void decode(std::size_t id, std::span<std::int64_t> heights) const {
    const std::size_t r = radix();
    for (auto& h : heights) {
      h = static_cast<std::int64_t>(id % r) - kmax;
      id /= r;
    }
  }

  std::size_t encode(std::span<const std::int64_t> heights) const {
    std::size_t id = 0;
    for (std::size_t a = heights.size(); a-- > 0;)
      id = id * radix() + static_cast<std::size_t>(heights[a] + kmax);
    return id;
  }
};

struct EnumerateOptions {
  double eps = kDefaultEps;
  std::size_t budget = 10'000'000;
  unsigned threads = 1;
};

namespace detail {

inline std::size_t checked_state_count(std::size_t radix, std::size_t sites, std::size_t budget) {
  std::size_t states = 1;
  for (std::size_t a = 0; a < sites; ++a) {
    if (states > budget / radix)
      throw BudgetError("enumeration: (2K+1)^|window| exceeds the budget of " +
                        std::to_string(budget) + " states");
    states *= radix;
  }
  return states;
}

// Mixed-radix odometer over heights in [-kmax, kmax]^m.
class Odometer {
 public:
  Odometer(std::size_t sites, std::int64_t kmax)
      : kmax_(kmax), heights_(sites, -kmax), at_edge_(sites) {}

  std::span<const std::int64_t> heights() const { return heights_; }
  bool touches_edge() const { return at_edge_ > 0; }

  void seek(std::size_t id) {
    const auto r = static_cast<std::size_t>(2 * kmax_ + 1);
    at_edge_ = 0;
    for (auto& h : heights_) {
      h = static_cast<std::int64_t>(id % r) - kmax_;
      id /= r;
      if (h == kmax_ || h == -kmax_) ++at_edge_;
    }
  }

  // Returns the index of the highest digit that changed.
  std::size_t next() {
    for (std::size_t a = 0; a < heights_.size(); ++a) {
      const bool was_edge = heights_[a] == kmax_ || heights_[a] == -kmax_;
      if (heights_[a] < kmax_) {
        ++heights_[a];
        const bool is_edge = heights_[a] == kmax_;
        at_edge_ += static_cast<int>(is_edge) - static_cast<int>(was_edge);
        return a;
      }
      heights_[a] = -kmax_;
      // kmax -> -kmax keeps the site on the edge.
    }
    return heights_.size();
  }

 private:
  std::int64_t kmax_;
  std::vector<std::int64_t> heights_;
  int at_edge_ = 0;
};

// Fills log-weights -beta * H for ids in [begin, end). Rows share all digits
// except the lowest, so the energy of the remaining sites is computed once per
// row and only the lowest site's interactions vary along it.
template <typename V>
void fill_log_weights(std::span<double> out, std::size_t begin, std::size_t end,
                      std::size_t sites, std::int64_t kmax, std::int64_t omega, double beta,
                      const WindowCouplings& couplings, const V& potential) {
  const auto r = static_cast<std::size_t>(2 * kmax + 1);
  std::vector<std::int64_t> heights(sites);
  for (std::size_t row_start = begin; row_start < end; row_start += r) {
    std::size_t id = row_start / r;
    for (std::size_t a = 1; a < sites; ++a) {
      heights[a] = static_cast<std::int64_t>(id % r) - kmax;
      id /= r;
    }
    double rest = 0.0;
    for (std::size_t a = 1; a < sites; ++a) {
      double row = couplings.boundary(a) * potential(heights[a] - omega);
      for (std::size_t b = a + 1; b < sites; ++b)
        row += couplings.pair(b - a) * potential(heights[a] - heights[b]);
      rest += row;
    }
    for (std::int64_t h = -kmax; h <= kmax; ++h) {
      double own = couplings.boundary(0) * potential(h - omega);
      for (std::size_t b = 1; b < sites; ++b) own += couplings.pair(b) * potential(h - heights[b]);
      out[row_start + static_cast<std::size_t>(h + kmax)] = -beta * 2.0 * (rest + own);
    }
  }
}

template <typename F>
void parallel_blocks(std::size_t total, std::size_t granule, unsigned threads, F&& body) {
  threads = std::max(1u, threads);
  const std::size_t rows = total / granule;
  if (threads == 1 || rows < threads) {
    body(std::size_t{0}, total);
    return;
  }
  std::vector<std::jthread> pool;
  const std::size_t per = (rows + threads - 1) / threads;
  for (unsigned k = 0; k < threads; ++k) {
    const std::size_t b = std::min(rows, k * per) * granule;
    const std::size_t e = std::min(rows, (k + 1) * per) * granule;
    if (b < e) pool.emplace_back([&body, b, e] { body(b, e); });
  }
}

}  // namespace detail

/// Exact table of the finite-volume measure with constant boundary height
/// omega, truncated to heights in {-kmax, ..., kmax}.
inline ExactDistribution enumerate(Window window, std::int64_t kmax, std::int64_t omega,
                                   const ModelParams& params, const EnumerateOptions& options = {}) {
  params.validate();
  detail::require(kmax >= 1, "enumerate: kmax must be >= 1");
  detail::require(window.hi >= window.lo, "enumerate: empty window");
  const std::size_t sites = window.size();
  const auto r = static_cast<std::size_t>(2 * kmax + 1);
  const std::size_t states = detail::checked_state_count(r, sites, options.budget);

  ExactDistribution dist;
  dist.window = window;
  dist.kmax = kmax;
  dist.omega = omega;
  dist.params = params;
  dist.eps = options.eps;
  dist.table.assign(states, 0.0);

  const WindowCouplings couplings(params.kernel, window, options.eps);
  const TabulatedPotential potential(params.p, 2 * kmax + std::abs(omega) + 1);
  detail::parallel_blocks(states, r, options.threads, [&](std::size_t b, std::size_t e) {
    detail::fill_log_weights(std::span<double>(dist.table), b, e, sites, kmax, omega,
                             params.beta, couplings, potential);
  });

  const double top = *std::max_element(dist.table.begin(), dist.table.end());
  detail::parallel_blocks(states, r, options.threads, [&](std::size_t b, std::size_t e) {
    for (std::size_t id = b; id < e; ++id) dist.table[id] = std::exp(dist.table[id] - top);
  });
  CompensatedSum z;
  for (double w : dist.table) z += w;
  const double zv = z.value();
  for (double& w : dist.table) w /= zv;
  dist.log_z = top + std::log(zv);

  detail::Odometer odo(sites, kmax);
  CompensatedSum edge;
  for (std::size_t id = 0; id < states; ++id) {
    if (odo.touches_edge()) edge += dist.table[id];
    odo.next();
  }
  dist.boundary_layer_mass = edge.value();
  return dist;
}

/// Sum_phi P(phi) f(phi), with f called on the heights of each configuration.
template <typename F>
double moment(const ExactDistribution& dist, F&& observable) {
  detail::Odometer odo(dist.window.size(), dist.kmax);
  CompensatedSum s;
  for (std::size_t id = 0; id < dist.states(); ++id) {
    s += dist.table[id] * observable(odo.heights());
    odo.next();
  }
  return s.value();
}

/// RE(a | b) = sum a log(a / b) in nats; +infinity when a puts mass where b
/// has none. Tables of different length are a structural error.
inline double relative_entropy(std::span<const double> a, std::span<const double> b) {
  detail::require(a.size() == b.size(), "relative_entropy: tables index different spaces");
  CompensatedSum s;
  for (std::size_t k = 0; k < a.size(); ++k) {
    if (a[k] <= 0.0) continue;
    if (b[k] <= 0.0) return std::numeric_limits<double>::infinity();
    s += a[k] * std::log(a[k] / b[k]);
  }
  // Gibbs' inequality: negative values are rounding.
  return std::max(0.0, s.value());
}

inline double relative_entropy(const ExactDistribution& a, const ExactDistribution& b) {
  detail::require(a.window == b.window && a.kmax == b.kmax,
                  "relative_entropy: distributions live on different configuration spaces");
  return relative_entropy(std::span<const double>(a.table), std::span<const double>(b.table));
}

/// RE(nu | nu_{t,n}) at formula level: the expectation under dist of
/// -log d(nu_{t,n})/d(nu).
inline double re_via_formula(const ExactDistribution& dist, const StepProfile& step) {
  detail::require_step_fits(dist.window, step);
  if (step.t == 0) return 0.0;
  const WindowCouplings couplings(dist.params.kernel, dist.window, dist.eps);
  const TabulatedPotential potential(
      dist.params.p, 2 * dist.kmax + std::abs(dist.omega) + std::abs(step.t) + 1);
  const double beta = dist.params.beta;
  return moment(dist, [&](std::span<const std::int64_t> h) {
    return -log_rn_derivative(h, dist.omega, step, beta, couplings, potential);
  });
}

struct DlrReport {
  /// Total-variation distance between dist and its recomposition.
  double residual = 0.0;
  /// Level below which the residual is indistinguishable from truncation and
  /// rounding effects.
  double floor = 0.0;
};

/// Checks the DLR equation on a subwindow: the table is recomposed as
/// (marginal outside the subwindow) x (finite-volume measure on the subwindow
/// given those outside heights), and compared in total variation.
///
/// The subwindow measure is re-derived from the Hamiltonian directly, using
/// only the pair terms that involve subwindow sites.
inline DlrReport dlr_residual(const ExactDistribution& dist, Window sub,
                              std::size_t budget = 10'000'000) {
  const Window w = dist.window;
  detail::require(w.contains(sub) && sub.hi >= sub.lo && sub.size() < w.size(),
                  "dlr_residual: subwindow must be a proper subset of the window");
  const std::size_t sites = w.size();
  const std::size_t r = dist.radix();
  detail::checked_state_count(r, sites, budget);

  const WindowCouplings couplings(dist.params.kernel, w, dist.eps);
  const TabulatedPotential potential(dist.params.p, 2 * dist.kmax + std::abs(dist.omega) + 1);
  const double beta = dist.params.beta;

  std::vector<std::size_t> inner, outer, stride(sites);
  std::size_t s = 1;
  for (std::size_t a = 0; a < sites; ++a) {
    stride[a] = s;
    s *= r;
    (sub.contains(w.lo + static_cast<std::int64_t>(a)) ? inner : outer).push_back(a);
  }
  std::size_t inner_states = 1;
  for (std::size_t k = 0; k < inner.size(); ++k) inner_states *= r;

  auto sub_energy = [&](std::span<const std::int64_t> h) {
    double e = 0.0;
    for (std::size_t a : inner) {
      e += couplings.boundary(a) * potential(h[a] - dist.omega);
      for (std::size_t b = 0; b < sites; ++b) {
        if (b == a) continue;
        const bool b_inner = sub.contains(w.lo + static_cast<std::int64_t>(b));
        if (b_inner && b < a) continue;
        e += couplings.pair(a, b) * potential(h[a] - h[b]);
      }
    }
    return 2.0 * e;
  };

  std::vector<std::int64_t> heights(sites, -dist.kmax);
  detail::Odometer outer_odo(outer.size(), dist.kmax);
  std::vector<double> log_w(inner_states);
  std::vector<std::size_t> ids(inner_states);
  CompensatedSum tv;
  const std::size_t outer_states = dist.states() / inner_states;
  for (std::size_t o = 0; o < outer_states; ++o) {
    for (std::size_t k = 0; k < outer.size(); ++k) heights[outer[k]] = outer_odo.heights()[k];
    detail::Odometer inner_odo(inner.size(), dist.kmax);
    double marginal = 0.0;
    for (std::size_t q = 0; q < inner_states; ++q) {
      for (std::size_t k = 0; k < inner.size(); ++k) heights[inner[k]] = inner_odo.heights()[k];
      std::size_t id = 0;
      for (std::size_t a = 0; a < sites; ++a)
        id += static_cast<std::size_t>(heights[a] + dist.kmax) * stride[a];
      ids[q] = id;
      marginal += dist.table[id];
      log_w[q] = -beta * sub_energy(heights);
      inner_odo.next();
    }
    const double top = *std::max_element(log_w.begin(), log_w.end());
    double z = 0.0;
    for (double& lw : log_w) z += (lw = std::exp(lw - top));
    for (std::size_t q = 0; q < inner_states; ++q)
      tv += std::abs(dist.table[ids[q]] - marginal * log_w[q] / z);
    outer_odo.next();
  }
  return {0.5 * tv.value(),
          dist.boundary_layer_mass + 1e3 * std::numeric_limits<double>::epsilon()};
}

/// CSV dump: config-id, one column per site (named by lattice index),
/// probability.
inline void write_csv(std::ostream& os, const ExactDistribution& dist) {
  std::vector<std::string> header{"config_id"};
  for (std::int64_t i = dist.window.lo; i <= dist.window.hi; ++i)
    header.push_back("phi_" + std::to_string(i));
  header.emplace_back("probability");
  write_header(os, header);
  detail::Odometer odo(dist.window.size(), dist.kmax);
  for (std::size_t id = 0; id < dist.states(); ++id) {
    CsvRow row(os);
    row << static_cast<std::uint64_t>(id);
    for (auto h : odo.heights()) row << h;
    row << dist.table[id];
    odo.next();
  }
}

}  // namespace lrh
