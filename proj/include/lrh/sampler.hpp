#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "lrh/error.hpp"
#include "lrh/model.hpp"

namespace lrh {

/// Deterministic 64-bit generator. Uniforms are built from the top 53 bits
/// so streams are identical across standard library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  std::uint64_t bits() { return engine_(); }
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  friend bool operator==(const Rng&, const Rng&) = default;

 private:
  std::mt19937_64 engine_;
};

enum class ProposalKind { unit_step, geometric_step };

/// Symmetric height-increment law. Geometric steps use
/// P(|delta| = k) = (1 - q) q^(k-1), k >= 1, with a uniform sign.
struct ProposalLaw {
  ProposalKind kind = ProposalKind::unit_step;
  double q = 0.5;

  static ProposalLaw unit() { return {}; }
  static ProposalLaw geometric(double q = 0.5) { return {ProposalKind::geometric_step, q}; }

  std::int64_t draw(Rng& rng) const {
    const std::uint64_t r = rng.bits();
    const std::int64_t sign = (r >> 63) ? 1 : -1;
    if (kind == ProposalKind::unit_step) return sign;
    // Remaining 53 bits give a uniform in (0, 1] for the inversion.
    const double u = static_cast<double>((r >> 10) & ((std::uint64_t{1} << 53) - 1)) * 0x1.0p-53;
    const double v = 1.0 - u;
    const auto k = static_cast<std::int64_t>(std::floor(std::log(v) / std::log(q))) + 1;
    return sign * std::max<std::int64_t>(k, 1);
  }

  double probability(std::int64_t delta) const {
    if (delta == 0) return 0.0;
    const std::int64_t k = delta < 0 ? -delta : delta;
    if (kind == ProposalKind::unit_step) return k == 1 ? 0.5 : 0.0;
    return 0.5 * (1.0 - q) * std::pow(q, static_cast<double>(k - 1));
  }

  void validate() const {
    if (kind == ProposalKind::geometric_step)
      detail::require(q > 0.0 && q < 1.0, "proposal: geometric q must lie in (0, 1)");
  }

  friend bool operator==(const ProposalLaw&, const ProposalLaw&) = default;
};

inline std::string to_string(ProposalKind kind) {
  return kind == ProposalKind::unit_step ? "unit-step" : "geometric-step";
}

struct ChainOptions {
  double eps = kDefaultEps;
  /// Recompute the cached energy from scratch every this many sweeps (0: never).
  std::uint64_t revalidate_every = 1000;
  /// For p = 2, moves are priced from per-site local fields that are updated
  /// on acceptance and rebuilt every this many sweeps.
  std::uint64_t refresh_fields_every = 64;
  bool use_local_fields = true;
};

/// Metropolis chain for the finite-volume measure on a window with constant
/// boundary height. Heights are unbounded.
class Chain {
 public:
  Chain(const ModelParams& params, FieldConfig initial, std::uint64_t seed,
        const ChainOptions& options = {})
      : params_(params),
        potential_(params.p),
        couplings_(params.kernel, initial.window(), options.eps),
        config_(std::move(initial)),
        rng_(seed),
        options_(options) {
    params_.validate();
    fast_ = options_.use_local_fields && params_.p == 2.0;
    cached_energy_ = recompute_energy();
    if (fast_) rebuild_fields();
  }

  const FieldConfig& config() const { return config_; }
  const ModelParams& params() const { return params_; }
  const WindowCouplings& couplings() const { return couplings_; }
  double cached_energy() const { return cached_energy_; }
  std::uint64_t sweep_count() const { return sweeps_; }
  std::uint64_t proposals() const { return proposals_; }
  std::uint64_t accepted() const { return accepted_; }
  double acceptance_rate() const {
    return proposals_ == 0 ? 0.0 : static_cast<double>(accepted_) / static_cast<double>(proposals_);
  }
  const Rng& rng() const { return rng_; }

  double recompute_energy() const {
    return energy(config_.heights(), config_.omega(), couplings_, potential_);
  }

  /// Shifts the stored energy by a constant. Only differences enter the
  /// acceptance rule, so trajectories do not depend on it.
  void offset_cached_energy(double c) { cached_energy_ += c; }

  /// Energy change of phi_site += delta.
  double energy_delta(std::int64_t site, std::int64_t delta) const {
    return delta_at(index_of(site), delta);
  }

  /// min(1, exp(-beta dH)) for the move phi_site += delta.
  double acceptance_probability(std::int64_t site, std::int64_t delta) const {
    const double dh = energy_delta(site, delta);
    return dh <= 0.0 ? 1.0 : std::exp(-params_.beta * dh);
  }

  /// One Metropolis update at `site`. Exactly one uniform is drawn for the
  /// accept test, whatever the proposal.
  bool step(std::int64_t site, const ProposalLaw& proposal) {
    return step_at(index_of(site), proposal);
  }

  /// One Metropolis update at every site, left to right.
  void sweep(const ProposalLaw& proposal) {
    const std::size_t m = config_.window().size();
    for (std::size_t a = 0; a < m; ++a) step_at(a, proposal);
    ++sweeps_;
    if (fast_ && options_.refresh_fields_every != 0 && sweeps_ % options_.refresh_fields_every == 0)
      rebuild_fields();
    if (options_.revalidate_every != 0 && sweeps_ % options_.revalidate_every == 0)
      cached_energy_ = recompute_energy();
  }

 private:
  std::size_t index_of(std::int64_t site) const {
    detail::require(config_.window().contains(site),
                    "chain: site " + std::to_string(site) + " is outside the window");
    return config_.window().index(site);
  }

  double delta_at(std::size_t a, std::int64_t delta) const {
    if (!fast_)
      return energy_delta_at(config_.heights(), config_.omega(), a, delta, couplings_, potential_);
    // 2 sum_j J_aj [(phi_a + d - phi_j)^2 - (phi_a - phi_j)^2] over window
    // partners and the boundary, written through the local field.
    const auto h = static_cast<double>(config_.heights()[a]);
    const auto d = static_cast<double>(delta);
    const double total = couplings_.total(a);
    const double pull =
        h * total - field_[a] - couplings_.boundary(a) * static_cast<double>(config_.omega());
    return 2.0 * (2.0 * d * pull + d * d * total);
  }

  bool step_at(std::size_t a, const ProposalLaw& proposal) {
    const std::int64_t delta = proposal.draw(rng_);
    const double dh = delta_at(a, delta);
    const double u = rng_.uniform();
    ++proposals_;
    if (!(dh <= 0.0 || u < std::exp(-params_.beta * dh))) return false;
    config_.heights()[a] += delta;
    cached_energy_ += dh;
    ++accepted_;
    if (fast_) {
      const std::size_t m = field_.size();
      const auto d = static_cast<double>(delta);
      for (std::size_t b = 0; b < m; ++b)
        if (b != a) field_[b] += couplings_.pair(a, b) * d;
    }
    return true;
  }

  void rebuild_fields() {
    const auto h = config_.heights();
    const std::size_t m = h.size();
    field_.assign(m, 0.0);
    for (std::size_t a = 0; a < m; ++a)
      for (std::size_t b = 0; b < m; ++b)
        if (b != a) field_[a] += couplings_.pair(a, b) * static_cast<double>(h[b]);
  }

  ModelParams params_;
  Potential potential_;
  WindowCouplings couplings_;
  FieldConfig config_;
  Rng rng_;
  ChainOptions options_;
  bool fast_ = false;
  // field_[a] = sum_{b != a in window} J(|a - b|) phi_b
  std::vector<double> field_;
  double cached_energy_ = 0.0;
  std::uint64_t sweeps_ = 0;
  std::uint64_t proposals_ = 0;
  std::uint64_t accepted_ = 0;
};

struct Schedule {
  std::uint64_t burn_in = 1000;
  std::uint64_t sweeps = 10000;
  std::uint64_t thinning = 1;

  friend bool operator==(const Schedule&, const Schedule&) = default;
};

/// A named scalar function of the current configuration.
struct Observable {
  std::string name;
  std::function<double(const FieldConfig&)> eval;
};

namespace observables {

inline Observable height(std::int64_t site) {
  return {"phi_" + std::to_string(site),
          [site](const FieldConfig& c) { return static_cast<double>(c.at(site)); }};
}

inline Observable constant(double value, std::string name = "one") {
  return {std::move(name), [value](const FieldConfig&) { return value; }};
}

/// log d(nu_{t,n})/d(nu) evaluated at the current configuration.
inline Observable log_rn(const StepProfile& step, const ModelParams& params, Window window,
                         double eps = kDefaultEps) {
  detail::require_step_fits(window, step);
  auto couplings = std::make_shared<const WindowCouplings>(params.kernel, window, eps);
  return {"log_rn", [step, params, couplings](const FieldConfig& c) {
            return log_rn_derivative(c.heights(), c.omega(), step, params.beta, *couplings,
                                     Potential(params.p));
          }};
}

}  // namespace observables

/// Output of one sampling run: parameters, acceptance summary and one series
/// per observable, sampled every `thinning` sweeps after burn-in.
struct RunRecord {
  std::uint64_t seed = 0;
  ModelParams params;
  Window window;
  std::int64_t omega = 0;
  ProposalLaw proposal;
  Schedule schedule;
  double acceptance_rate = 0.0;
  std::vector<std::uint64_t> sweep_index;
  std::vector<std::string> names;
  std::vector<std::vector<double>> series;

  const std::vector<double>& series_for(const std::string& name) const {
    for (std::size_t k = 0; k < names.size(); ++k)
      if (names[k] == name) return series[k];
    throw PreconditionError("run record: no observable named '" + name + "'");
  }

  bool has(const std::string& name) const {
    for (const auto& n : names)
      if (n == name) return true;
    return false;
  }

  friend bool operator==(const RunRecord&, const RunRecord&) = default;
};

inline RunRecord run_chain(const ModelParams& params, const FieldConfig& initial,
                           const ProposalLaw& proposal, const Schedule& schedule,
                           const std::vector<Observable>& obs, std::uint64_t seed,
                           const ChainOptions& options = {}) {
  proposal.validate();
  detail::require(schedule.thinning >= 1, "run_chain: thinning must be >= 1");
  Chain chain(params, initial, seed, options);

  RunRecord rec;
  rec.seed = seed;
  rec.params = params;
  rec.window = initial.window();
  rec.omega = initial.omega();
  rec.proposal = proposal;
  rec.schedule = schedule;
  for (const auto& o : obs) rec.names.push_back(o.name);
  rec.series.resize(obs.size());

  for (std::uint64_t s = 0; s < schedule.burn_in; ++s) chain.sweep(proposal);
  const std::uint64_t before_props = chain.proposals();
  const std::uint64_t before_acc = chain.accepted();
  for (std::uint64_t s = 1; s <= schedule.sweeps; ++s) {
    chain.sweep(proposal);
    if (s % schedule.thinning != 0) continue;
    rec.sweep_index.push_back(chain.sweep_count());
    for (std::size_t k = 0; k < obs.size(); ++k) rec.series[k].push_back(obs[k].eval(chain.config()));
  }
  const std::uint64_t props = chain.proposals() - before_props;
  rec.acceptance_rate =
      props == 0 ? 0.0 : static_cast<double>(chain.accepted() - before_acc) / static_cast<double>(props);
  return rec;
}

/// Convenience overload: window with constant boundary omega, flat start.
inline RunRecord run_chain(const ModelParams& params, Window window, std::int64_t omega,
                           const ProposalLaw& proposal, const Schedule& schedule,
                           const std::vector<Observable>& obs, std::uint64_t seed,
                           const ChainOptions& options = {}) {
  return run_chain(params, FieldConfig(window, omega), proposal, schedule, obs, seed, options);
}

}  // namespace lrh
