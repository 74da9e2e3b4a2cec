#include "arisac/driver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "arisac/conic/barrier_solver.hpp"
#include "arisac/crb.hpp"
#include "arisac/initializer.hpp"
#include "arisac/precoder.hpp"

namespace arisac::driver {

namespace {

using conic::ConicSolution;
using conic::SolveStatus;

double now_ms() {
  return std::chrono::duration<double, std::milli>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

Precoder zero_precoder(const Scenario& sc) {
  Precoder w;
  w.w = CMat::Zero(sc.n_antennas, sc.k_users + sc.n_antennas);
  return w;
}

// Largest uniform scale s <= 1 keeping the signal-free surface power draw
// within budget (the phase initializer ignores the budget entirely).
ReflectVector fit_phi_to_budget(const ReflectVector& phi0, const ChannelSet& ch,
                                const Scenario& sc) {
  const Precoder w0 = zero_precoder(sc);
  const double cap = sc.p_ris * (1.0 - 1e-6);
  if (model::ris_power(ch, w0, phi0, sc) <= cap) return phi0;
  double lo = 0.0, hi = 1.0;
  for (int it = 0; it < 80; ++it) {
    const double mid = 0.5 * (lo + hi);
    ReflectVector cand{mid * phi0.phi};
    (model::ris_power(ch, w0, cand, sc) <= cap ? lo : hi) = mid;
  }
  return ReflectVector{lo * phi0.phi};
}

double g_of(const ChannelSet& ch, const ReflectVector& phi, const Precoder& w,
            const Scenario& sc) {
  return crb::g_trace(model::echo_model(ch, phi, sc), w);
}

double crb_from_g(double g, const Scenario& sc) {
  return 1.0 / (2.0 * sc.n_samples * sc.rcs_var * g);
}

double min_sinr_margin_db(const ChannelSet& ch, const Precoder& w,
                          const ReflectVector& phi, const Scenario& sc) {
  double margin = std::numeric_limits<double>::infinity();
  for (int k = 0; k < sc.k_users; ++k) {
    const double s = model::sinr(k, ch, w, phi, sc);
    margin = std::min(margin, linear_to_db(s) - linear_to_db(sc.sinr_targets[k]));
  }
  return margin;
}

// Relaxes each constraint family in turn and re-solves the first precoder
// SDR; families whose removal restores solvability are the binding ones.
std::string diagnose_infeasibility(const Scenario& sc, const ChannelSet& ch,
                                   const ReflectVector& phi,
                                   conic::SolverBackend& be, double tol) {
  struct Variant {
    const char* family;
    Scenario sc;
  };
  std::vector<Variant> variants;
  {
    Scenario relaxed = sc;
    relaxed.set_uniform_sinr_target(1e-12);
    variants.push_back({"sinr", relaxed});
  }
  {
    Scenario relaxed = sc;
    relaxed.p_ris = 1e9;
    variants.push_back({"ris-power", relaxed});
  }
  {
    Scenario relaxed = sc;
    relaxed.p_bs = 1e9;
    variants.push_back({"bs-power", relaxed});
  }
  std::string binding;
  for (const auto& v : variants) {
    try {
      const auto consts = precoder::subproblem_constants(ch, phi, v.sc);
      const auto em = model::echo_model(ch, phi, v.sc);
      auto sdr = precoder::build_w_sdr(em, consts, v.sc);
      conic::BarrierSolver fallback;
      const ConicSolution sol = sdr.program.solve(be, tol);
      if (sol.status != SolveStatus::Optimal) continue;
    } catch (const std::exception&) {
      continue;
    }
    if (!binding.empty()) binding += ", ";
    binding += v.family;
  }
  if (binding.empty()) binding = "none identified (jointly binding)";
  return "precoder subproblem infeasible; binding constraint families: " + binding;
}

struct LoopConfig {
  bool unit_modulus = false;  // passive variant: project the surface step
};

DesignResult run_loop(const Scenario& sc, const ChannelSet& ch, const DriverOptions& opts,
                      conic::SolverBackend* backend, const LoopConfig& cfg) {
  conic::BarrierSolver fallback;
  conic::SolverBackend& be = backend ? *backend : fallback;

  DesignResult res;

  // Surface initialization: cascaded-power phases at full amplitude, scaled
  // down if the signal-free draw alone would exceed the budget.
  const auto init = initializer::rcg_solve(initializer::build_init_problem(ch));
  ReflectVector phi = initializer::initial_phi(init.psi, sc.a_max);
  phi = fit_phi_to_budget(phi, ch, sc);

  Precoder w = zero_precoder(sc);
  double g_prev = 0.0;
  double best_g = -std::numeric_limits<double>::infinity();
  res.status = RunStatus::MaxIter;

  for (int outer = 0; outer < opts.max_outer; ++outer) {
    const double t0 = now_ms();
    BcdRecord rec;
    rec.outer = outer;

    // ---- Precoder step: maximize the sensing objective at fixed phi ----
    ConicSolution sol;
    precoder::WSdr sdr;
    precoder::PrecoderSubproblemConstants consts;
    try {
      consts = precoder::subproblem_constants(ch, phi, sc);
      const auto em = model::echo_model(ch, phi, sc);
      sdr = precoder::build_w_sdr(em, consts, sc);
      sol = sdr.program.solve(be, opts.solver_tol);
    } catch (const std::exception& e) {
      if (outer == 0) {
        res.status = RunStatus::Infeasible;
        res.message = e.what();
        return res;
      }
      break;  // keep the best iterate found so far
    }
    if (sol.status != SolveStatus::Optimal) {
      if (outer == 0) {
        res.status = RunStatus::Infeasible;
        res.message = sol.status == SolveStatus::Infeasible
                          ? diagnose_infeasibility(sc, ch, phi, be, opts.solver_tol)
                          : "precoder subproblem failed: " + sol.message;
        return res;
      }
      break;
    }
    w = precoder::recover_w(sdr, sol, consts);
    double g_cur = g_of(ch, phi, w, sc);

    // ---- Surface step: majorized descent, accepted only on true progress ----
    const auto inner = reflector::run_inner_loop(ch, w, phi, sc, opts.inner, &be);
    rec.inner_iters = inner.iterations;
    {
      ReflectVector cand = inner.phi;
      if (cfg.unit_modulus) {
        for (int m = 0; m < cand.m(); ++m) {
          const double a = std::abs(cand.phi(m));
          cand.phi(m) = a > 0.0 ? cand.phi(m) / a : Complex(1.0, 0.0);
        }
        if (!constraint_violations(sc, ch, w, cand, 1e-6, false).empty()) cand = phi;
      }
      const double g_cand = g_of(ch, cand, w, sc);
      if (g_cand >= g_cur) {
        phi = cand;
        g_cur = g_cand;
      }
    }

    rec.g = g_cur;
    rec.crb_rad2 = crb_from_g(g_cur, sc);
    rec.crb_db = linear_to_db(rec.crb_rad2);
    rec.min_sinr_margin_db = min_sinr_margin_db(ch, w, phi, sc);
    rec.bs_power_w = w.power();
    rec.ris_power_w = model::ris_power(ch, w, phi, sc);
    rec.wall_ms = now_ms() - t0;
    res.trace.push_back(rec);

    if (g_cur > best_g) {
      best_g = g_cur;
      res.w = w;
      res.phi = phi;
      res.g = g_cur;
    }
    if (outer > 0 && std::abs(g_cur - g_prev) < opts.outer_tol * std::abs(g_prev)) {
      res.status = RunStatus::Converged;
      g_prev = g_cur;
      break;
    }
    g_prev = g_cur;
  }

  if (res.trace.empty()) {
    res.status = RunStatus::Infeasible;
    if (res.message.empty()) res.message = "no successful outer iteration";
    return res;
  }
  res.crb_theta = crb_from_g(res.g, sc);
  return res;
}

}  // namespace

DesignResult run_bcd(const Scenario& sc, const ChannelSet& ch, const DriverOptions& opts,
                     conic::SolverBackend* backend) {
  return run_loop(sc, ch, opts, backend, LoopConfig{});
}

DesignResult run_passive_baseline(const Scenario& sc, const ChannelSet& ch,
                                  const DriverOptions& opts,
                                  conic::SolverBackend* backend) {
  Scenario psc = sc;
  psc.noise_ris = 0.0;           // passive elements add no amplification noise
  psc.p_bs = sc.p_bs + sc.p_ris; // surface budget folded into transmit power
  psc.p_ris = 1e9;               // no surface power constraint
  psc.a_max = 1.0;
  LoopConfig cfg;
  cfg.unit_modulus = true;
  return run_loop(psc, ch, opts, backend, cfg);
}

DesignResult run_radar_only(const Scenario& sc, const ChannelSet& ch,
                            const DriverOptions& opts, conic::SolverBackend* backend) {
  Scenario rsc = sc;
  rsc.k_users = 0;
  rsc.sinr_targets.clear();
  ChannelSet rch = ch;
  rch.h_d.clear();
  rch.h_r.clear();
  return run_loop(rsc, rch, opts, backend, LoopConfig{});
}

std::vector<std::string> constraint_violations(const Scenario& sc, const ChannelSet& ch,
                                               const Precoder& w, const ReflectVector& phi,
                                               double rel_tol, bool check_ris_budget) {
  std::vector<std::string> out;
  if (w.power() > sc.p_bs * (1.0 + rel_tol)) out.push_back("bs-power");
  if (check_ris_budget &&
      model::ris_power(ch, w, phi, sc) > sc.p_ris * (1.0 + rel_tol))
    out.push_back("ris-power");
  for (int k = 0; k < sc.k_users; ++k)
    if (model::sinr(k, ch, w, phi, sc) < sc.sinr_targets[k] * (1.0 - rel_tol))
      out.push_back("sinr-" + std::to_string(k));
  if (phi.max_amplitude() > sc.a_max * (1.0 + rel_tol)) out.push_back("amplitude");
  return out;
}

std::string trace_json_lines(const DesignResult& res) {
  std::ostringstream os;
  for (const auto& r : res.trace) {
    nlohmann::json j{{"outer", r.outer},
                     {"g", r.g},
                     {"crb_rad2", r.crb_rad2},
                     {"crb_db", r.crb_db},
                     {"min_sinr_margin_db", r.min_sinr_margin_db},
                     {"bs_power_w", r.bs_power_w},
                     {"ris_power_w", r.ris_power_w},
                     {"inner_iters", r.inner_iters},
                     {"wall_ms", r.wall_ms}};
    os << j.dump() << '\n';
  }
  return os.str();
}

}  // namespace arisac::driver
