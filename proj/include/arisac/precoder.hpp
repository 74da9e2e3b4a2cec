#pragma once

#include <vector>

#include "arisac/conic/program.hpp"
#include "arisac/model.hpp"

namespace arisac::precoder {

using model::EchoModel;
using model::Precoder;
using model::ReflectVector;
using scenario::ChannelSet;
using scenario::Scenario;

// Constants of the transmit-precoding subproblem for a fixed surface phi.
struct PrecoderSubproblemConstants {
  CMat e_mat;                   // E: maps Tr{R_w E} to the signal part of the RIS power
  double c_r = 0.0;             // static RIS power draw (signal-independent terms)
  std::vector<double> c_s;      // per-user noise floor seen through the surface
  std::vector<CVec> h_compound; // h_k = h_d,k + G^T Phi h_r,k
};

PrecoderSubproblemConstants subproblem_constants(const ChannelSet& ch,
                                                 const ReflectVector& phi,
                                                 const Scenario& sc);

// The lifted SDR program plus handles to its variables.
struct WSdr {
  conic::ConicProgram program;
  std::vector<conic::VarRef> w_k;  // per-user lifted beamformers, PSD
  conic::VarRef r_w;               // total transmit covariance, PSD
  conic::VarRef t_w;               // epigraph variable for the sensing objective
  bool zero_echo = false;          // Q == 0: the 2x2 block degenerates to a linear row
};

// Builds: max t_w subject to the Schur-complement block (lowered to a
// rotated second-order cone on its determinant), BS and RIS power budgets,
// per-user SINR rows, and the covariance-dominance PSD constraint.  Throws
// std::invalid_argument when the static RIS draw alone exceeds the budget.
WSdr build_w_sdr(const EchoModel& em, const PrecoderSubproblemConstants& consts,
                 const Scenario& sc);

struct RecoveryDiagnostics {
  std::vector<int> lifted_rank;   // numerical rank of each lifted W_k
  double min_residual_eig = 0.0;  // most negative eigenvalue of the radar residual,
                                  // relative to its largest magnitude
};

// Closed-form rank-one recovery w_k = (h_k^T W_k h_k^*)^{-1/2} W_k h_k^*,
// followed by a symmetric eigen-factorization of the radar residual
// R_w - sum_k w_k w_k^H (eigenvalues in [-1e-8*scale, 0) clipped to zero;
// anything below that raises a rank-recovery failure).
Precoder recover_w(const WSdr& sdr, const conic::ConicSolution& sol,
                   const PrecoderSubproblemConstants& consts,
                   RecoveryDiagnostics* diag = nullptr);

}  // namespace arisac::precoder
