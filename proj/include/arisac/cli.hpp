#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "arisac/driver.hpp"
#include "arisac/scenario.hpp"

namespace arisac::cli {

using scenario::Scenario;

// Scenario config parse: line-oriented key = value, '#'/';' comments, keys
// with a _dbm/_db suffix converted at the boundary.  Errors carry line/key
// context and every violation is reported, not just the first.
struct ConfigResult {
  Scenario sc;
  std::vector<std::string> errors;
  std::vector<std::string> warnings;
  bool ok() const { return errors.empty(); }
};

ConfigResult parse_scenario_config(const std::string& text);
ConfigResult load_scenario_config(const std::string& path);

// One experiment axis: sweep `param` over `values` for every (seed, variant).
struct SweepSpec {
  std::string param;  // p_bs | gamma | m_elements | n_antennas | k_users | ris_x_position
  std::vector<double> values;
  std::vector<std::uint64_t> seeds;
  std::vector<std::string> variants;  // aris-isac | pris-isac | aris-radar-only
  std::string out_dir;
};

// Sweep-spec file: scenario keys plus sweep_param / sweep_values / seeds /
// variants / out.
struct SweepSpecResult {
  SweepSpec spec;
  Scenario base;
  std::vector<std::string> errors;
  bool ok() const { return errors.empty(); }
};

SweepSpecResult parse_sweep_spec(const std::string& text);

struct SweepRow {
  std::string variant;
  std::string param;
  double value = 0.0;
  std::uint64_t seed = 0;
  double crb_rad2 = 0.0;
  double crb_db = 0.0;
  double min_sinr_db = 0.0;
  double bs_power_w = 0.0;
  double ris_power_w = 0.0;
  int outer_iters = 0;
  double wall_ms = 0.0;
  std::string status;  // converged | max-iter | infeasible | error
};

struct SweepResult {
  std::vector<SweepRow> rows;  // deterministic order: variant, value, seed
  std::string csv;             // full schema, one row per run
  std::string median_csv;      // per (variant, value): medians over seeds
};

// Applies one swept value to a copy of the base scenario.  p_bs values are
// dBm, gamma values dB, counts integer, ris_x_position meters.  Throws
// std::invalid_argument on an unknown parameter name.
Scenario apply_param(const Scenario& base, const std::string& param, double value);

// Runs every (variant, value, seed) combination on a worker pool of `jobs`
// threads.  Per-run failures land in the status column and never abort the
// sweep.
SweepResult run_sweep(const SweepSpec& spec, const Scenario& base,
                      const driver::DriverOptions& opts = {}, int jobs = 1);

// CSV assembly, exposed so the aggregation can be cross-checked.
std::string rows_to_csv(const std::vector<SweepRow>& rows);
std::string rows_to_median_csv(const std::vector<SweepRow>& rows);

// Drops the wall_ms column (the only nondeterministic one) for comparisons.
std::string strip_timing(const std::string& csv);

}  // namespace arisac::cli
