#pragma once

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

#include "lrh/error.hpp"
#include "lrh/io.hpp"
#include "lrh/sampler.hpp"

namespace lrh::harness {

enum class Task { exact, sample, ledger, tailsum, profile, fit };

inline std::string to_string(Task task) {
  switch (task) {
    case Task::exact: return "exact";
    case Task::sample: return "sample";
    case Task::ledger: return "ledger";
    case Task::tailsum: return "tailsum";
    case Task::profile: return "profile";
    case Task::fit: return "fit";
  }
  return "?";
}

inline std::optional<Task> parse_task(std::string_view s) {
  for (Task t : {Task::exact, Task::sample, Task::ledger, Task::tailsum, Task::profile, Task::fit})
    if (s == to_string(t)) return t;
  return std::nullopt;
}

/// Raised with every violation found in a document, not just the first.
class ConfigError : public PreconditionError {
 public:
  explicit ConfigError(std::vector<std::string> violations)
      : PreconditionError(join(violations)), violations_(std::move(violations)) {}

  const std::vector<std::string>& violations() const { return violations_; }

 private:
  static std::string join(const std::vector<std::string>& v) {
    std::string s = "invalid config:";
    for (const auto& m : v) s += "\n  - " + m;
    return s;
  }
  std::vector<std::string> violations_;
};

/// One experiment. Optional fields have no default and are required only by
/// the tasks that use them.
struct ExperimentConfig {
  std::optional<Task> task;

  std::optional<double> alpha;
  double amplitude = 1.0;
  std::optional<double> beta;
  std::optional<double> p;

  std::optional<std::int64_t> n;  // window {-n, ..., n}
  std::int64_t omega = 0;

  std::uint64_t seed = 0;
  std::uint64_t burn_in = 1000;
  std::uint64_t sweeps = 10000;
  std::uint64_t thinning = 1;
  ProposalKind proposal = ProposalKind::unit_step;
  double q = 0.5;
  std::uint64_t threads = 1;

  double eps = 1e-10;

  std::optional<std::int64_t> k;  // exact: heights truncated to |phi| <= k
  std::uint64_t budget = 10'000'000;

  std::vector<std::int64_t> ledger_t;
  std::vector<std::int64_t> ledger_n;
  std::vector<std::int64_t> profile_sizes;
  std::vector<std::int64_t> tailsum_sizes;

  std::string fit_input;
  std::string fit_x = "n";
  std::string fit_y = "variance";

  std::string output_dir = "out";

  /// sweep.<key> = [v1, v2, ...], kept sorted by key. Values are canonical
  /// scalar text for <key>.
  std::map<std::string, std::vector<std::string>> grid;
  std::uint64_t sweep_cap = 256;

  friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline std::string_view unquote(std::string_view s) {
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') return s.substr(1, s.size() - 2);
  return s;
}

template <typename T>
std::optional<T> parse_number(std::string_view s) {
  T v{};
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

/// Splits "[a, b, c]" into its items; nullopt if not bracketed.
inline std::optional<std::vector<std::string_view>> split_list(std::string_view s) {
  if (s.size() < 2 || s.front() != '[' || s.back() != ']') return std::nullopt;
  std::vector<std::string_view> items;
  std::string_view body = trim(s.substr(1, s.size() - 2));
  if (body.empty()) return items;
  while (true) {
    const auto comma = body.find(',');
    items.push_back(trim(body.substr(0, comma)));
    if (comma == std::string_view::npos) break;
    body = body.substr(comma + 1);
  }
  return items;
}

// Scalar codecs for each member type.
template <typename T>
struct Codec;

template <>
struct Codec<double> {
  static std::optional<double> parse(std::string_view s) { return parse_number<double>(s); }
  static std::string emit(double v) { return format_number(v); }
  static constexpr const char* what = "a number";
};
template <>
struct Codec<std::int64_t> {
  static std::optional<std::int64_t> parse(std::string_view s) { return parse_number<std::int64_t>(s); }
  static std::string emit(std::int64_t v) { return format_number(v); }
  static constexpr const char* what = "an integer";
};
template <>
struct Codec<std::uint64_t> {
  static std::optional<std::uint64_t> parse(std::string_view s) { return parse_number<std::uint64_t>(s); }
  static std::string emit(std::uint64_t v) { return format_number(v); }
  static constexpr const char* what = "a non-negative integer";
};
template <>
struct Codec<std::string> {
  static std::optional<std::string> parse(std::string_view s) { return std::string(unquote(s)); }
  static std::string emit(const std::string& v) { return v; }
  static constexpr const char* what = "a string";
};
template <>
struct Codec<Task> {
  static std::optional<Task> parse(std::string_view s) { return parse_task(s); }
  static std::string emit(Task t) { return to_string(t); }
  static constexpr const char* what = "one of exact, sample, ledger, tailsum, profile, fit";
};
template <>
struct Codec<ProposalKind> {
  static std::optional<ProposalKind> parse(std::string_view s) {
    if (s == "unit-step") return ProposalKind::unit_step;
    if (s == "geometric-step") return ProposalKind::geometric_step;
    return std::nullopt;
  }
  static std::string emit(ProposalKind k) { return lrh::to_string(k); }
  static constexpr const char* what = "unit-step or geometric-step";
};

template <typename T>
struct is_optional : std::false_type {};
template <typename T>
struct is_optional<std::optional<T>> : std::true_type {};
template <typename T>
struct is_vector : std::false_type {};
template <typename T>
struct is_vector<std::vector<T>> : std::true_type {};

struct Field {
  std::string key;
  bool list = false;
  // Sets the field from raw text; returns an error message on failure.
  std::function<std::optional<std::string>(ExperimentConfig&, std::string_view)> set;
  // Canonical text, or nullopt when an optional field is unset.
  std::function<std::optional<std::string>(const ExperimentConfig&)> emit;
};

template <typename M>
Field field(std::string key, M ExperimentConfig::*member) {
  Field f;
  f.key = key;
  f.list = is_vector<M>::value;
  f.set = [key, member](ExperimentConfig& c, std::string_view raw) -> std::optional<std::string> {
    if constexpr (is_vector<M>::value) {
      using T = typename M::value_type;
      const auto items = split_list(raw);
      if (!items) return key + ": expected a list like [1, 2, 3]";
      M out;
      for (auto item : *items) {
        const auto v = Codec<T>::parse(item);
        if (!v) return key + ": list item '" + std::string(item) + "' is not " + Codec<T>::what;
        out.push_back(*v);
      }
      c.*member = std::move(out);
    } else if constexpr (is_optional<M>::value) {
      using T = typename M::value_type;
      const auto v = Codec<T>::parse(raw);
      if (!v) return key + ": '" + std::string(raw) + "' is not " + Codec<T>::what;
      c.*member = *v;
    } else {
      const auto v = Codec<M>::parse(raw);
      if (!v) return key + ": '" + std::string(raw) + "' is not " + Codec<M>::what;
      c.*member = *v;
    }
    return std::nullopt;
  };
  f.emit = [member](const ExperimentConfig& c) -> std::optional<std::string> {
    const M& v = c.*member;
    if constexpr (is_vector<M>::value) {
      using T = typename M::value_type;
      if (v.empty()) return std::nullopt;
      std::string s = "[";
      for (std::size_t k = 0; k < v.size(); ++k) s += (k ? ", " : "") + Codec<T>::emit(v[k]);
      return s + "]";
    } else if constexpr (is_optional<M>::value) {
      using T = typename M::value_type;
      if (!v) return std::nullopt;
      return Codec<T>::emit(*v);
    } else {
      if constexpr (std::is_same_v<M, std::string>)
        if (v.empty()) return std::nullopt;
      return Codec<M>::emit(v);
    }
  };
  return f;
}

inline const std::vector<Field>& fields() {
  using C = ExperimentConfig;
  static const std::vector<Field> table{
      field("task", &C::task),
      field("model.alpha", &C::alpha),
      field("model.amplitude", &C::amplitude),
      field("model.beta", &C::beta),
      field("model.p", &C::p),
      field("geometry.n", &C::n),
      field("geometry.omega", &C::omega),
      field("run.seed", &C::seed),
      field("run.burn_in", &C::burn_in),
      field("run.sweeps", &C::sweeps),
      field("run.thinning", &C::thinning),
      field("run.proposal", &C::proposal),
      field("run.q", &C::q),
      field("run.threads", &C::threads),
      field("numerics.eps", &C::eps),
      field("exact.k", &C::k),
      field("exact.budget", &C::budget),
      field("ledger.t", &C::ledger_t),
      field("ledger.n", &C::ledger_n),
      field("profile.sizes", &C::profile_sizes),
      field("tailsum.sizes", &C::tailsum_sizes),
      field("fit.input", &C::fit_input),
      field("fit.x", &C::fit_x),
      field("fit.y", &C::fit_y),
      field("output.dir", &C::output_dir),
      field("sweep.cap", &C::sweep_cap),
  };
  return table;
}

inline const Field* find_field(std::string_view key) {
  for (const auto& f : fields())
    if (f.key == key) return &f;
  return nullptr;
}

// Keys that never change results: excluded from the run identity.
inline bool identity_neutral(std::string_view key) {
  return key == "output.dir" || key == "run.threads" || key == "sweep.cap";
}

inline void check_sizes(const std::vector<std::int64_t>& v, const std::string& key,
                        std::vector<std::string>& out) {
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (v[i] < 1) out.push_back(key + ": entries must be >= 1");
    if (i > 0 && v[i] <= v[i - 1]) out.push_back(key + ": entries must be strictly increasing");
  }
}

}  // namespace detail

/// Range and required-field checks for one fully specified (non-grid) config.
inline std::vector<std::string> violations(const ExperimentConfig& c) {
  std::vector<std::string> out;
  auto need = [&](bool present, const std::string& key) {
    if (!present) out.push_back(key + ": required by task '" + to_string(*c.task) + "'");
  };
  if (c.alpha && !(*c.alpha > 1.0)) out.push_back("model.alpha: must satisfy alpha > 1");
  if (!(c.amplitude > 0.0)) out.push_back("model.amplitude: must be > 0");
  if (c.beta && !(*c.beta > 0.0 && *c.beta < 1e300)) out.push_back("model.beta: must satisfy beta > 0");
  if (c.p && !(*c.p >= 1.0 && *c.p <= 2.0)) out.push_back("model.p: must lie in [1, 2]");
  if (c.n && *c.n < 1) out.push_back("geometry.n: must be >= 1");
  if (c.k && *c.k < 1) out.push_back("exact.k: must be >= 1");
  if (c.thinning < 1) out.push_back("run.thinning: must be >= 1");
  if (c.threads < 1) out.push_back("run.threads: must be >= 1");
  if (c.proposal == ProposalKind::geometric_step && !(c.q > 0.0 && c.q < 1.0))
    out.push_back("run.q: must lie in (0, 1)");
  if (!(c.eps > 0.0)) out.push_back("numerics.eps: must be > 0");
  if (c.budget < 1) out.push_back("exact.budget: must be >= 1");
  if (c.output_dir.empty()) out.push_back("output.dir: must not be empty");
  for (auto t : c.ledger_t)
    if (t < 0) out.push_back("ledger.t: entries must be >= 0");
  for (auto m : c.ledger_n) {
    if (m < 1) out.push_back("ledger.n: entries must be >= 1");
    else if (c.n && m - 1 > *c.n)
      out.push_back("ledger.n: step half-width " + std::to_string(m) +
                    " does not fit inside the window of geometry.n = " + std::to_string(*c.n));
  }
  detail::check_sizes(c.profile_sizes, "profile.sizes", out);
  detail::check_sizes(c.tailsum_sizes, "tailsum.sizes", out);

  if (!c.task) {
    out.push_back("task: missing");
    return out;
  }
  const bool model = c.alpha && c.beta && c.p;
  switch (*c.task) {
    case Task::exact:
      need(model, "model.alpha, model.beta, model.p");
      need(c.n.has_value(), "geometry.n");
      need(c.k.has_value(), "exact.k");
      break;
    case Task::sample:
      need(model, "model.alpha, model.beta, model.p");
      need(c.n.has_value(), "geometry.n");
      break;
    case Task::ledger:
      need(model, "model.alpha, model.beta, model.p");
      need(c.n.has_value(), "geometry.n");
      need(c.k.has_value(), "exact.k");
      need(!c.ledger_t.empty(), "ledger.t");
      need(!c.ledger_n.empty(), "ledger.n");
      break;
    case Task::tailsum:
      need(c.alpha.has_value(), "model.alpha");
      need(!c.tailsum_sizes.empty(), "tailsum.sizes");
      break;
    case Task::profile:
      need(model, "model.alpha, model.beta, model.p");
      need(!c.profile_sizes.empty(), "profile.sizes");
      break;
    case Task::fit:
      need(!c.fit_input.empty(), "fit.input");
      break;
  }
  return out;
}

/// Canonical document: one `key = value` line per set field in a fixed
/// order, then the grid. With `identity` set, keys that cannot change any
/// result (output directory, thread count, grid) are left out.
inline std::string emit_config(const ExperimentConfig& c, bool identity = false) {
  std::string s;
  for (const auto& f : detail::fields()) {
    if (identity && detail::identity_neutral(f.key)) continue;
    if (auto v = f.emit(c)) s += f.key + " = " + *v + "\n";
  }
  if (!identity)
    for (const auto& [key, values] : c.grid) {
      s += "sweep." + key + " = [";
      for (std::size_t k = 0; k < values.size(); ++k) s += (k ? ", " : "") + values[k];
      s += "]\n";
    }
  return s;
}

/// Flattened `key -> canonical value` view of a config (grid excluded).
inline std::map<std::string, std::string> config_snapshot(const ExperimentConfig& c) {
  std::map<std::string, std::string> out;
  for (const auto& f : detail::fields())
    if (auto v = f.emit(c)) out[f.key] = *v;
  return out;
}

/// Applies one grid assignment `key = raw` to a copy of the config.
inline ExperimentConfig with_value(ExperimentConfig c, const std::string& key, std::string_view raw) {
  const auto* f = detail::find_field(key);
  lrh::detail::require(f != nullptr, "unknown key '" + key + "'");
  if (auto err = f->set(c, raw)) throw PreconditionError(*err);
  return c;
}

/// Cartesian expansion of the grid. Each cell has its grid cleared and the
/// assignments applied. Cells come back in key order of the grid, last key
/// varying fastest.
inline std::vector<ExperimentConfig> expand_grid(const ExperimentConfig& base) {
  ExperimentConfig plain = base;
  plain.grid.clear();
  std::vector<ExperimentConfig> cells{plain};
  for (const auto& [key, values] : base.grid) {
    std::vector<ExperimentConfig> next;
    next.reserve(cells.size() * values.size());
    for (const auto& cell : cells)
      for (const auto& v : values) next.push_back(with_value(cell, key, v));
    cells = std::move(next);
  }
  return cells;
}

inline std::size_t grid_size(const ExperimentConfig& c) {
  std::size_t n = 1;
  for (const auto& [key, values] : c.grid) n *= values.size();
  return n;
}

/// Parses a flat `key = value` document. Lines starting with '#' and text
/// after '#' are comments. Lists are written `[a, b, c]`. Keys of the form
/// `sweep.<key>` hold a list of values for <key> and define a grid.
///
/// If `task` is given it fills a missing `task` key; a conflicting one is a
/// violation. Throws ConfigError listing every violation.
inline ExperimentConfig parse_config(std::string_view text, std::optional<Task> task = {}) {
  ExperimentConfig c;
  std::vector<std::string> errs;
  std::map<std::string, int> seen;
  std::istringstream in{std::string(text)};
  std::string line_buf;
  int lineno = 0;
  while (std::getline(in, line_buf)) {
    ++lineno;
    std::string_view line = line_buf;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      errs.push_back("line " + std::to_string(lineno) + ": expected 'key = value'");
      continue;
    }
    const std::string key(detail::trim(line.substr(0, eq)));
    const std::string_view raw = detail::trim(line.substr(eq + 1));
    if (seen.count(key)) {
      errs.push_back(key + ": duplicate key (line " + std::to_string(lineno) + ", first on line " +
                     std::to_string(seen[key]) + ")");
      continue;
    }
    seen[key] = lineno;

    if (key.rfind("sweep.", 0) == 0 && key != "sweep.cap") {
      const std::string target = key.substr(6);
      const auto* f = detail::find_field(target);
      if (f == nullptr || target == "task" || target.rfind("sweep.", 0) == 0 ||
          detail::identity_neutral(target)) {
        errs.push_back(key + ": '" + target + "' cannot be swept");
        continue;
      }
      if (f->list) {
        errs.push_back(key + ": list-valued key '" + target + "' cannot be swept");
        continue;
      }
      const auto items = detail::split_list(raw);
      if (!items || items->empty()) {
        errs.push_back(key + ": expected a non-empty list like [1, 2]");
        continue;
      }
      std::vector<std::string> canon;
      for (auto item : *items) {
        ExperimentConfig scratch;
        if (auto err = f->set(scratch, item)) {
          errs.push_back("sweep." + *err);
          continue;
        }
        canon.push_back(*f->emit(scratch));
      }
      c.grid[target] = std::move(canon);
      continue;
    }

    const auto* f = detail::find_field(key);
    if (f == nullptr) {
      errs.push_back(key + ": unknown key");
      continue;
    }
    if (auto err = f->set(c, raw)) errs.push_back(*err);
  }

  if (task) {
    if (c.task && *c.task != *task)
      errs.push_back("task: config says '" + to_string(*c.task) + "' but '" + to_string(*task) +
                     "' was requested");
    c.task = *task;
  }
  {
    // Range and required-field checks run even after syntax errors, so one
    // pass reports everything. Keys that failed to parse are not reported
    // again as missing.
    const auto already = [&](const std::string& v) {
      const std::string head = v.substr(0, v.find(':'));
      for (const auto& e : errs)
        if (head.find(e.substr(0, e.find(':'))) != std::string::npos) return true;
      return std::find(errs.begin(), errs.end(), v) != errs.end();
    };
    const std::size_t cells = grid_size(c);
    if (cells > c.sweep_cap) {
      errs.push_back("sweep: grid has " + std::to_string(cells) + " cells, above sweep.cap = " +
                     std::to_string(c.sweep_cap));
    } else {
      // Validate each cell; report each distinct message once.
      for (const auto& cell : expand_grid(c))
        for (auto& v : violations(cell))
          if (!already(v)) errs.push_back(std::move(v));
    }
  }
  if (!errs.empty()) throw ConfigError(std::move(errs));
  return c;
}

/// Model parameters of a validated config.
inline ModelParams model_params(const ExperimentConfig& c) {
  return ModelParams(CouplingKernel(c.alpha.value_or(2.0), c.amplitude), c.beta.value_or(1.0),
                     c.p.value_or(2.0));
}

inline ProposalLaw proposal_law(const ExperimentConfig& c) {
  return c.proposal == ProposalKind::unit_step ? ProposalLaw::unit() : ProposalLaw::geometric(c.q);
}

inline Schedule schedule(const ExperimentConfig& c) { return {c.burn_in, c.sweeps, c.thinning}; }

}  // namespace lrh::harness
