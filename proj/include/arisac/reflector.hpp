#pragma once

#include <cstdint>
#include <vector>

#include "arisac/conic/program.hpp"
#include "arisac/model.hpp"
#include "arisac/phi_coefficients.hpp"

namespace arisac::reflector {

using arisac::PhiCoefficients;
using model::EchoModel;
using model::Precoder;
using model::ReflectVector;
using scenario::ChannelSet;
using scenario::Scenario;

// Per-user quadratic SINR data and RIS-power quadratics for a fixed precoder.
struct SinrPhiConstants {
  std::vector<CMat> c_mat;      // total received quadratic form, PSD
  std::vector<CVec> d_vec;      // linear cross terms
  std::vector<double> c_phi;    // constant terms (direct-path power + noise)
  std::vector<std::vector<Complex>> a;  // a[k][i] = h_d,k^T w_i
  std::vector<std::vector<CVec>> b;     // b[k][i] = diag{G w_i} h_r,k
  CMat j_mat;                   // echo-amplification power quadratic
  CMat k_ris_mat;               // signal + thermal power quadratic, >= 2 sigma_z^2 I
  double quartic_noise_coeff = 0.0;  // sigma_t^2 sigma_z^2 alpha_rt^4
};

// Convex majorizers of every nonconvex term, expanded around `anchor`.
struct SurrogatePack {
  double lambda1_tilde = 0.0;   // curvature bound of the linearized objective
  CVec f_tilde;                 // objective linear term
  double c2 = 0.0;              // objective constant (for surrogate evaluation)
  double lambda_y[2] = {0.0, 0.0};        // curvature bounds in lifted space
  double lambda_y_tilde[2] = {0.0, 0.0};  // curvature bounds back in phi space
  CVec ell_tilde[2];            // linear terms of the sextic majorizer
  double x_tilde[2] = {0.0, 0.0};
  CVec varrho_tilde[2];         // ell_tilde + t_i * (linearized denominator)
  double kappa_tilde[2] = {0.0, 0.0};
  std::vector<CVec> d_tilde;    // per-user linearized SINR cross terms
  std::vector<double> c_phi_tilde;
  double t[2] = {0.0, 0.0};     // fractional-term levels the pack was built for
  double safety = 1.0;          // curvature safety factor actually applied
  CVec anchor;                  // expansion point phi_s
};

struct PhiQcqp {
  conic::ConicProgram program;
  conic::VarRef phi;       // complex length M
  conic::VarRef norm_epi;  // scalar >= phi^H phi
};

PhiCoefficients compute_phi_coefficients(const EchoModel& em, const Precoder& w,
                                         const CMat& psi, const ChannelSet& ch,
                                         int kron_cap = 16);

SinrPhiConstants compute_sinr_phi_constants(const ChannelSet& ch, const Precoder& w,
                                            const Scenario& sc);

// Closed-form optimal levels of the two fractional objective terms at phi.
// Throws on degenerate denominators or imaginary residue above 1e-8.
std::pair<double, double> update_t(const PhiCoefficients& coeffs,
                                   const ReflectVector& phi);

// Builds all majorizers around phi_s.  `safety` multiplies every curvature
// bound (then clamped at zero: the amplitude-box substitution and the
// epigraph lowering both need nonnegative curvature).
SurrogatePack build_surrogates(const PhiCoefficients& coeffs,
                               const SinrPhiConstants& sinr_consts, double t1,
                               double t2, const ReflectVector& phi_s,
                               const Scenario& sc, double safety = 1.0);

// Assembles the convex reflection-update program:
//   min (lambda1~/2) s + Re{phi^H f~}
//   s.t. s >= phi^H phi, phi^H K~ phi <= P_RIS - c3, linearized SINR rows,
//        majorized fractional rows, |phi_m| <= a_max.
// Throws std::invalid_argument when c3 >= P_RIS (reports the implied maximum
// feasible amplitude).
PhiQcqp build_phi_qcqp(const SurrogatePack& pack, const SinrPhiConstants& sinr_consts,
                       const Scenario& sc);

// Echo-noise covariance at phi: sigma_z^2 G^T Phi Phi^H G* + sigma_r^2 I.
CMat update_psi(const ReflectVector& phi, const ChannelSet& ch, const Scenario& sc);

// ---- Evaluation helpers (used by the loop's acceptance logic and tests) ----

// True reduced objective: frac_1 + frac_2 - v^H F v (equals -g/|c0|^2 when
// psi matches the echo noise at phi).
double inner_objective(const PhiCoefficients& coeffs, const CVec& phi);

// -v^H F v and its convex majorizer.
double quartic_term(const PhiCoefficients& coeffs, const CVec& phi);
double surrogate_objective(const SurrogatePack& pack, const CVec& phi);

// Fractional row i (0-based): true value xi^H v v^H Xi v - t_i phi^H R_ihat phi
// and its majorizer.
double true_fraction_row(const PhiCoefficients& coeffs, int i, double t_i,
                         const CVec& phi);
double surrogate_fraction_row(const SurrogatePack& pack, int i, const CVec& phi);

// SINR row k: true value (<= 0 iff user k meets its target) and its majorizer.
double true_sinr_row(const SinrPhiConstants& consts, const Scenario& sc, int k,
                     const CVec& phi);
double surrogate_sinr_row(const SurrogatePack& pack, const SinrPhiConstants& consts,
                          int k, const CVec& phi);

// phi^H K~ phi + c3: upper bound on the true RIS power draw over the box.
double relaxed_ris_power(const SinrPhiConstants& consts, const Scenario& sc,
                         const CVec& phi);

// Largest eigenvalue of (embed(m) + embed(m)^T) where embed is the real
// 2M x 2M representation of a complex matrix.
double max_sym_embedding_eig(const CMat& m);

// ---- Inner loop ----

struct InnerOptions {
  int max_iters = 50;
  double tol = 1e-4;            // relative change of the true objective
  int kron_cap = 16;
  double lambda_safety = 1.0;
  bool check_domination = false;  // sample-test each majorizer, double safety on violation
  int domination_samples = 100;
  std::uint64_t domination_seed = 77;
};

struct InnerTraceRecord {
  int iter = 0;
  double objective_before = 0.0;  // true objective at the anchor (frozen psi)
  double objective_after = 0.0;   // true objective at the accepted step (same psi)
  double solver_residual = 0.0;
  double lambda1 = 0.0;
  double lambda_y1 = 0.0;
  double lambda_y2 = 0.0;
  std::string status;
};

struct InnerResult {
  ReflectVector phi;
  CMat psi;
  double objective = 0.0;  // true objective at the returned phi
  int iterations = 0;
  bool converged = false;
  std::vector<InnerTraceRecord> trace;
};

// Alternates {t-update, majorized phi-step, psi-update} from phi0 until the
// true objective's relative change drops below tol.  An infeasible phi-step
// retains the anchor, refreshes t and psi, and retries once; a second failure
// exits with the current iterate.
InnerResult run_inner_loop(const ChannelSet& ch, const Precoder& w,
                           const ReflectVector& phi0, const Scenario& sc,
                           const InnerOptions& opts = {},
                           conic::SolverBackend* backend = nullptr);

}  // namespace arisac::reflector
