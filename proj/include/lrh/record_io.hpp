#pragma once

#include <ostream>
#include <string>

#include <nlohmann/json.hpp>

#include "lrh/io.hpp"
#include "lrh/sampler.hpp"

namespace lrh {

inline nlohmann::json to_json(const ModelParams& params) {
  return {{"alpha", params.alpha()},
          {"amplitude", params.kernel.amplitude()},
          {"beta", params.beta},
          {"p", params.p}};
}

/// One JSON-lines entry for a sampling run. The series itself lives in the
/// CSV file named by `series_file`.
inline nlohmann::json to_json(const RunRecord& record, const std::string& series_file) {
  return {{"seed", record.seed},
          {"params", to_json(record.params)},
          {"window", {{"lo", record.window.lo}, {"hi", record.window.hi}}},
          {"omega", record.omega},
          {"proposal", {{"kind", to_string(record.proposal.kind)}, {"q", record.proposal.q}}},
          {"schedule",
           {{"burn_in", record.schedule.burn_in},
            {"sweeps", record.schedule.sweeps},
            {"thinning", record.schedule.thinning}}},
          {"acceptance_rate", record.acceptance_rate},
          {"observables", record.names},
          {"samples", record.sweep_index.size()},
          {"series_file", series_file}};
}

/// Columns: sweep, then one column per observable.
inline void write_series_csv(std::ostream& os, const RunRecord& record) {
  std::vector<std::string> header{"sweep"};
  header.insert(header.end(), record.names.begin(), record.names.end());
  write_header(os, header);
  for (std::size_t k = 0; k < record.sweep_index.size(); ++k) {
    CsvRow row(os);
    row << record.sweep_index[k];
    for (const auto& s : record.series) row << s[k];
  }
}

}  // namespace lrh
