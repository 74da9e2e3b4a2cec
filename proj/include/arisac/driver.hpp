#pragma once

#include <string>
#include <vector>

#include "arisac/conic/program.hpp"
#include "arisac/model.hpp"
#include "arisac/reflector.hpp"

namespace arisac::driver {

using model::Precoder;
using model::ReflectVector;
using scenario::ChannelSet;
using scenario::Scenario;

enum class RunStatus { Converged = 0, MaxIter = 1, Infeasible = 2 };

// One outer-iteration snapshot, taken after the precoder step and the
// surface step of that iteration.
struct BcdRecord {
  int outer = 0;
  double g = 0.0;                 // sensing objective (larger is better)
  double crb_rad2 = 0.0;
  double crb_db = 0.0;
  double min_sinr_margin_db = 0.0;  // min_k SINR_k - target_k [dB]; +inf if K=0
  double bs_power_w = 0.0;
  double ris_power_w = 0.0;
  int inner_iters = 0;
  double wall_ms = 0.0;
};

struct DriverOptions {
  double outer_tol = 1e-3;  // relative change of g across outer iterations
  int max_outer = 30;
  double solver_tol = 1e-8;
  reflector::InnerOptions inner;
};

struct DesignResult {
  Precoder w;
  ReflectVector phi;
  double g = 0.0;
  double crb_theta = 0.0;  // rad^2
  std::vector<BcdRecord> trace;
  RunStatus status = RunStatus::Infeasible;
  std::string message;
};

// Alternates the precoder SDR step and the surface majorization loop from an
// RCG-initialized surface until the relative change of g drops below
// opts.outer_tol.  Returns the best iterate seen.  A first-iteration SDR
// failure yields Infeasible with the binding constraint families named.
DesignResult run_bcd(const Scenario& sc, const ChannelSet& ch,
                     const DriverOptions& opts = {},
                     conic::SolverBackend* backend = nullptr);

// Passive-surface benchmark: unit-modulus reflection (amplitude box 1
// followed by a guarded unit-modulus projection), no reflection noise, no
// surface power budget, and the surface budget folded into the BS budget.
DesignResult run_passive_baseline(const Scenario& sc, const ChannelSet& ch,
                                  const DriverOptions& opts = {},
                                  conic::SolverBackend* backend = nullptr);

// Sensing-only baseline: user constraints and channels dropped.
DesignResult run_radar_only(const Scenario& sc, const ChannelSet& ch,
                            const DriverOptions& opts = {},
                            conic::SolverBackend* backend = nullptr);

// Names every design constraint violated beyond `rel_tol` relative slack
// (empty means feasible).  `check_ris_budget` is off for the passive variant.
std::vector<std::string> constraint_violations(const Scenario& sc, const ChannelSet& ch,
                                               const Precoder& w, const ReflectVector& phi,
                                               double rel_tol = 1e-6,
                                               bool check_ris_budget = true);

// Line-delimited JSON serialization of the trace (one record per line).
std::string trace_json_lines(const DesignResult& res);

}  // namespace arisac::driver
