#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdint>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "lrh/analysis.hpp"
#include "lrh/exact.hpp"
#include "lrh/harness/config.hpp"
#include "lrh/io.hpp"
#include "lrh/kernel.hpp"
#include "lrh/record_io.hpp"

namespace lrh::harness {

namespace fs = std::filesystem;

inline constexpr const char* kRegistryFile = "registry.jsonl";

/// 64-bit FNV-1a of the identity form of the config, as 16 hex digits.
inline std::string run_id(const ExperimentConfig& c) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : emit_config(c, true)) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

struct TaskOutcome {
  std::string run_id;
  std::string status = "ok";  // ok | failed
  std::string error;
  int exit_code = 0;
  /// Artifact paths relative to the output directory.
  std::vector<std::string> artifacts;
  nlohmann::json summary = nlohmann::json::object();
  ExperimentConfig config;
};

namespace detail {

inline std::ofstream open_out(const fs::path& path) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot open '" + path.string() + "' for writing");
  return os;
}

inline void close_checked(std::ofstream& os, const fs::path& path) {
  os.close();
  if (!os) throw IoError("failed writing '" + path.string() + "'");
}

inline void make_dirs(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory '" + dir.string() + "': " + ec.message());
}

inline std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

/// Moments table: alpha, beta, p, n, mean_abs, se, second_moment, se.
inline void write_moments(std::ostream& os, const ExperimentConfig& c, const MomentReport& m) {
  write_header(os, {"alpha", "beta", "p", "n", "mean_abs", "se", "second_moment", "se"});
  CsvRow(os) << *c.alpha << *c.beta << *c.p << *c.n << m.mean_abs.value << m.mean_abs.se
             << m.second_moment.value << m.second_moment.se;
}

inline void write_fit(std::ostream& os, const ExponentFit& f) {
  write_header(os, {"slope", "ci_lo", "ci_hi", "r2"});
  CsvRow(os) << f.slope << f.ci_lo << f.ci_hi << f.r2;
}

inline nlohmann::json fit_json(const ExponentFit& f) {
  return {{"slope", f.slope}, {"ci_lo", f.ci_lo}, {"ci_hi", f.ci_hi}, {"r2", f.r2}};
}

/// Reads two named numeric columns from a CSV file with a header row.
inline void read_columns(const fs::path& path, const std::string& xname, const std::string& yname,
                         std::vector<double>& xs, std::vector<double>& ys) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  auto split = [](const std::string& line) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    return cells;
  };
  std::string line;
  if (!std::getline(in, line)) throw PreconditionError("fit: '" + path.string() + "' is empty");
  const auto header = split(line);
  const auto col = [&](const std::string& name) {
    const auto it = std::find(header.begin(), header.end(), name);
    lrh::detail::require(it != header.end(), "fit: no column '" + name + "' in '" + path.string() + "'");
    return static_cast<std::size_t>(it - header.begin());
  };
  const std::size_t ix = col(xname), iy = col(yname);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = split(line);
    lrh::detail::require(cells.size() == header.size(), "fit: ragged row in '" + path.string() + "'");
    const auto x = parse_number<double>(cells[ix]);
    const auto y = parse_number<double>(cells[iy]);
    lrh::detail::require(x && y, "fit: non-numeric value in '" + path.string() + "'");
    xs.push_back(*x);
    ys.push_back(*y);
  }
}

/// Runs one fully specified config, writing artifacts under
/// <output.dir>/<task>-<run id>/. Exceptions propagate.
inline TaskOutcome execute(const ExperimentConfig& c) {
  TaskOutcome out;
  out.config = c;
  out.run_id = run_id(c);
  const fs::path root(c.output_dir);
  const std::string rel = to_string(*c.task) + "-" + out.run_id;
  const fs::path dir = root / rel;
  make_dirs(dir);
  auto artifact = [&](const std::string& name) {
    out.artifacts.push_back((fs::path(rel) / name).generic_string());
    return dir / name;
  };
  auto& s = out.summary;

  switch (*c.task) {
    case Task::exact: {
      EnumerateOptions opt;
      opt.eps = c.eps;
      opt.budget = c.budget;
      opt.threads = static_cast<unsigned>(c.threads);
      const auto dist = enumerate(Window::centered(*c.n), *c.k, c.omega, model_params(c), opt);
      const auto path = artifact("exact.csv");
      auto os = open_out(path);
      write_csv(os, dist);
      close_checked(os, path);
      const auto m = moments(dist, 0);
      const auto mpath = artifact("moments.csv");
      auto ms = open_out(mpath);
      write_moments(ms, c, m);
      close_checked(ms, mpath);
      s = {{"states", dist.states()},
           {"log_z", dist.log_z},
           {"boundary_layer_mass", dist.boundary_layer_mass},
           {"mean_abs", m.mean_abs.value},
           {"second_moment", m.second_moment.value}};
      break;
    }
    case Task::sample: {
      ChainOptions chain;
      chain.eps = c.eps;
      const auto rec =
          run_chain(model_params(c), Window::centered(*c.n), c.omega, proposal_law(c), schedule(c),
                    {observables::height(0), observables::ergodic(*c.n)}, c.seed, chain);
      const auto path = artifact("series.csv");
      auto os = open_out(path);
      write_series_csv(os, rec);
      close_checked(os, path);
      const auto jpath = artifact("record.json");
      auto js = open_out(jpath);
      js << to_json(rec, "series.csv").dump(2) << '\n';
      close_checked(js, jpath);
      s = {{"acceptance_rate", rec.acceptance_rate}, {"samples", rec.sweep_index.size()}};
      if (!rec.sweep_index.empty()) {
        const auto m = moments(rec);
        const auto mpath = artifact("moments.csv");
        auto ms = open_out(mpath);
        write_moments(ms, c, m);
        close_checked(ms, mpath);
        s["mean_abs"] = m.mean_abs.value;
        s["mean_abs_se"] = m.mean_abs.se;
        s["second_moment"] = m.second_moment.value;
        s["second_moment_se"] = m.second_moment.se;
        s["autocorrelation_time"] = m.autocorrelation_time;
      }
      break;
    }
    case Task::ledger: {
      EnumerateOptions opt;
      opt.eps = c.eps;
      opt.budget = c.budget;
      opt.threads = static_cast<unsigned>(c.threads);
      const auto dist = enumerate(Window::centered(*c.n), *c.k, c.omega, model_params(c), opt);
      const auto path = artifact("ledger.csv");
      auto os = open_out(path);
      write_header(os, {"alpha", "beta", "p", "t", "n", "formula", "bound"});
      bool all_hold = true;
      double max_gap = 0.0;
      for (auto t : c.ledger_t)
        for (auto m : c.ledger_n) {
          const auto l = re_ledger(dist, {t, m});
          all_hold = all_hold && l.holds;
          max_gap = std::max(max_gap, l.formula_value - l.bound_value);
          CsvRow(os) << *c.alpha << *c.beta << *c.p << t << m << l.formula_value << l.bound_value;
        }
      close_checked(os, path);
      s = {{"rows", c.ledger_t.size() * c.ledger_n.size()},
           {"all_hold", all_hold},
           {"max_formula_minus_bound", max_gap},
           {"boundary_layer_mass", dist.boundary_layer_mass}};
      break;
    }
    case Task::tailsum: {
      const CouplingKernel kernel(*c.alpha, c.amplitude);
      const auto path = artifact("tailsum.csv");
      auto os = open_out(path);
      write_header(os, {"n", "X"});
      std::vector<double> xs, xv, inc;
      for (auto m : c.tailsum_sizes) {
        const double x = cross_sum(kernel, m, c.eps).value;
        CsvRow(os) << m << x;
        xs.push_back(static_cast<double>(m));
        xv.push_back(x);
        inc.push_back(cross_sum(kernel, m + 1, c.eps).value - x);
      }
      close_checked(os, path);
      s = {{"last_X", xv.back()}};
      if (xs.size() >= 4) {
        const auto f = fit_exponent(xs, xv);
        const auto fpath = artifact("fit.csv");
        auto fs_ = open_out(fpath);
        write_fit(fs_, f);
        close_checked(fs_, fpath);
        s["slope"] = f.slope;
        s["increment_slope"] = fit_exponent(xs, inc).slope;
      }
      break;
    }
    case Task::profile: {
      ProfileOptions opt;
      opt.proposal = proposal_law(c);
      opt.chain.eps = c.eps;
      opt.threads = static_cast<unsigned>(c.threads);
      const auto prof = variance_profile(model_params(c), c.profile_sizes, schedule(c), c.seed, opt);
      const auto path = artifact("profile.csv");
      auto os = open_out(path);
      write_header(os, {"n", "variance", "se"});
      std::vector<double> xs, ys;
      for (const auto& pt : prof) {
        CsvRow(os) << pt.n << pt.variance << pt.se;
        xs.push_back(static_cast<double>(pt.n));
        ys.push_back(pt.variance);
      }
      close_checked(os, path);
      s = {{"sizes", prof.size()}};
      const bool positive = std::all_of(ys.begin(), ys.end(), [](double y) { return y > 0.0; });
      if (xs.size() >= 4 && positive) {
        const auto f = fit_exponent(xs, ys);
        const auto fpath = artifact("fit.csv");
        auto fs_ = open_out(fpath);
        write_fit(fs_, f);
        close_checked(fs_, fpath);
        s.update(fit_json(f));
      }
      break;
    }
    case Task::fit: {
      std::vector<double> xs, ys;
      read_columns(c.fit_input, c.fit_x, c.fit_y, xs, ys);
      const auto f = fit_exponent(xs, ys);
      const auto path = artifact("fit.csv");
      auto os = open_out(path);
      write_fit(os, f);
      close_checked(os, path);
      s = fit_json(f);
      break;
    }
  }
  return out;
}

inline std::mutex& registry_mutex() {
  static std::mutex m;
  return m;
}

}  // namespace detail

/// Exit status for an exception escaping a task.
inline int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const BudgetError*>(&e)) return 3;
  if (dynamic_cast<const IoError*>(&e)) return 4;
  if (dynamic_cast<const PreconditionError*>(&e)) return 2;
  return 1;
}

/// Like execute, but failures are captured in the outcome.
inline TaskOutcome execute_isolated(const ExperimentConfig& c) {
  try {
    return detail::execute(c);
  } catch (const std::exception& e) {
    TaskOutcome out;
    out.config = c;
    out.run_id = run_id(c);
    out.status = "failed";
    out.error = e.what();
    out.exit_code = exit_code_for(e);
    return out;
  }
}

/// Appends one JSON line for the outcome to <output.dir>/registry.jsonl.
/// Existing lines are never touched.
inline void append_registry(const TaskOutcome& o) {
  nlohmann::json entry = {{"run_id", o.run_id},
                          {"timestamp", detail::utc_timestamp()},
                          {"task", to_string(*o.config.task)},
                          {"status", o.status},
                          {"config", config_snapshot(o.config)},
                          {"artifacts", o.artifacts},
                          {"summary", o.summary}};
  if (!o.error.empty()) entry["error"] = o.error;
  const fs::path root(o.config.output_dir);
  std::lock_guard lock(detail::registry_mutex());
  detail::make_dirs(root);
  const fs::path path = root / kRegistryFile;
  std::ofstream os(path, std::ios::binary | std::ios::app);
  if (!os) throw IoError("cannot open '" + path.string() + "' for appending");
  os << entry.dump() << '\n';
  os.close();
  if (!os) throw IoError("failed appending to '" + path.string() + "'");
}

/// Runs one config and records it in the registry. Task exceptions
/// propagate after nothing has been registered.
inline TaskOutcome run_task(const ExperimentConfig& c) {
  lrh::detail::require(c.grid.empty(), "run_task: config defines a grid; use sweep");
  TaskOutcome o = detail::execute(c);
  append_registry(o);
  return o;
}

struct SweepReport {
  std::vector<TaskOutcome> cells;  // sorted by parameter tuple
  std::string summary_file;        // relative to output.dir
  std::size_t failures() const {
    return static_cast<std::size_t>(
        std::count_if(cells.begin(), cells.end(), [](const auto& c) { return c.status != "ok"; }));
  }
};

namespace detail {

// Numeric values compare numerically, anything else as text.
inline bool tuple_less(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  for (std::size_t k = 0; k < a.size(); ++k) {
    const auto x = parse_number<double>(a[k]);
    const auto y = parse_number<double>(b[k]);
    if (x && y) {
      if (*x != *y) return *x < *y;
    } else if (a[k] != b[k]) {
      return a[k] < b[k];
    }
  }
  return false;
}

}  // namespace detail

/// Expands the grid, runs every cell (run.threads at a time) and writes one
/// registry line per cell plus a merged sweep_summary.csv. A failing cell is
/// reported in its registry line and summary row; the other cells still run.
inline SweepReport sweep(const ExperimentConfig& base) {
  const std::size_t cells_n = grid_size(base);
  lrh::detail::require(cells_n <= base.sweep_cap,
                  "sweep: grid has " + std::to_string(cells_n) + " cells, above sweep.cap = " +
                      std::to_string(base.sweep_cap));
  std::vector<std::string> keys;
  for (const auto& [key, values] : base.grid) keys.push_back(key);

  struct Cell {
    ExperimentConfig config;
    std::vector<std::string> tuple;
  };
  std::vector<Cell> cells;
  for (auto& cfg : expand_grid(base)) {
    const auto snap = config_snapshot(cfg);
    Cell cell{std::move(cfg), {}};
    for (const auto& k : keys) cell.tuple.push_back(snap.count(k) ? snap.at(k) : "");
    cells.push_back(std::move(cell));
  }
  std::stable_sort(cells.begin(), cells.end(),
                   [](const Cell& a, const Cell& b) { return detail::tuple_less(a.tuple, b.tuple); });

  // Cells inside a sweep run single-threaded; parallelism is across cells.
  SweepReport report;
  report.cells.resize(cells.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i; (i = next++) < cells.size();) {
      ExperimentConfig cfg = cells[i].config;
      cfg.threads = 1;
      report.cells[i] = execute_isolated(cfg);
      report.cells[i].config = cells[i].config;
    }
  };
  const auto workers = static_cast<std::size_t>(std::max<std::uint64_t>(1, base.threads));
  {
    std::vector<std::jthread> pool;
    for (std::size_t w = 1; w < std::min(workers, cells.size()); ++w) pool.emplace_back(worker);
    worker();
  }

  for (const auto& o : report.cells) append_registry(o);

  std::vector<std::string> stat_keys;
  for (const auto& o : report.cells)
    for (const auto& [k, v] : o.summary.items())
      if (v.is_number() || v.is_boolean())
        if (std::find(stat_keys.begin(), stat_keys.end(), k) == stat_keys.end()) stat_keys.push_back(k);
  std::sort(stat_keys.begin(), stat_keys.end());

  std::vector<std::string> header = keys;
  header.insert(header.end(), {"run_id", "status"});
  header.insert(header.end(), stat_keys.begin(), stat_keys.end());
  header.push_back("error");

  const fs::path root(base.output_dir);
  detail::make_dirs(root);
  report.summary_file = "sweep_summary.csv";
  const fs::path path = root / report.summary_file;
  auto os = detail::open_out(path);
  write_header(os, header);
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const auto& o = report.cells[i];
    CsvRow row(os);
    for (const auto& v : cells[i].tuple) row << v;
    row << o.run_id << o.status;
    for (const auto& k : stat_keys) {
      if (!o.summary.contains(k)) {
        row << "";
        continue;
      }
      const auto& v = o.summary.at(k);
      if (v.is_boolean()) row << (v.get<bool>() ? "true" : "false");
      else if (v.is_number_unsigned()) row << v.get<std::uint64_t>();
      else if (v.is_number_integer()) row << v.get<std::int64_t>();
      else row << v.get<double>();
    }
    // Errors may contain commas or newlines; keep the first line, commas replaced.
    std::string err = o.error.substr(0, o.error.find('\n'));
    std::replace(err.begin(), err.end(), ',', ';');
    row << err;
  }
  detail::close_checked(os, path);
  return report;
}

}  // namespace lrh::harness
