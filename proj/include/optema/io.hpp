#pragma once

// Config files, trajectory CSV and JSON summaries.
//
// Config files are flat `key = value` lines grouped under [optimizer],
// [problem], [noise] and [run] headers; `#` starts a comment. Keys are unique
// across sections, so overrides may be given bare (`sigma=0`) or qualified
// (`noise.sigma=0`). Unknown keys are errors.

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "optema/harness.hpp"

namespace optema {

/// Resolved config: qualified key ("section.key") -> raw value text.
using ConfigEntries = std::map<std::string, std::string>;

/// All keys at their defaults.
ConfigEntries default_config();

/// Applies one file's contents on top of `entries`.
void merge_config_text(ConfigEntries& entries, const std::string& text);

/// Applies a single `key=value` override.
void apply_override(ConfigEntries& entries, const std::string& assignment);

/// Canonical echo: every key, section by section, in a fixed order. Parsing
/// the echo reproduces `entries` exactly.
std::string echo_config(const ConfigEntries& entries);

ExperimentConfig to_experiment_config(const ConfigEntries& entries);

/// `run.sigma_grid`, empty when unset.
std::vector<double> sigma_grid(const ConfigEntries& entries);

/// Shortest decimal text that parses back to exactly `x`.
std::string format_double(double x);

inline const char* kTrajectoryHeader =
    "t,f,true_grad_norm,g_norm,rho,alpha_t,beta_t,gamma,m_norm,v_norm,g_hat";

/// Writes every `record_every`-th step plus the last one.
void write_trajectory_csv(std::ostream& os, const Trajectory& traj, std::uint64_t record_every);

struct CsvRow {
  std::vector<std::string> cells;
};

/// Minimal reader for files produced by write_trajectory_csv.
std::vector<CsvRow> read_csv(std::istream& is);

nlohmann::ordered_json to_json(const CheckReport& r);
nlohmann::ordered_json to_json(const RateFit& f);
nlohmann::ordered_json to_json(const SeedResult& s);
nlohmann::ordered_json to_json(const SpikeReport& r);

}  // namespace optema
