#pragma once

#include "arisac/types.hpp"

namespace arisac {

// Coefficient pack for the explicit-in-phi form of the objective and the
// fractional-term auxiliary updates.  The M^2 x M^2 Kronecker blocks are
// materialized only when M is at or below the configured cap.
struct PhiCoefficients {
  CMat r1;  // A^H G* W* W^T G^T A
  CMat r2;  // A^H G* Psi^{-1} G^T A
  CVec xi1, xi2;          // xi_i = vec{R_i^H}
  CMat bigxi1, bigxi2;    // Xi_i = L R_ihat^T (x) L R_ihat
  CMat f1, f2, f;         // F_i = L R_ihat^T L (x) R_i,  F = F_1 + F_2
  double c0_sq = 0.0;     // |c_0|^2
  CMat psi;               // frozen R~_n
  bool kron_materialized = false;
  bool r2_positive = false;  // min eig of r2 above tolerance
};

}  // namespace arisac
