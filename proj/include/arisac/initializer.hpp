#pragma once

#include <vector>

#include "arisac/model.hpp"
#include "arisac/types.hpp"

namespace arisac::initializer {

using model::ReflectVector;
using scenario::ChannelSet;

// Quadratic form of the cascaded-channel-power objective over unit-modulus
// phase vectors psi:
//   maximize  psi^H m_mat psi + Re{psi^H m_vec}  s.t. |psi_m| = 1.
struct InitProblem {
  CMat m_mat;  // Hermitian PSD (sum of Gram matrices)
  CVec m_vec;
};

struct RcgResult {
  CVec psi;                        // unit-modulus, best iterate seen
  double objective = 0.0;          // -psi^H M psi - Re{psi^H m} at psi
  std::vector<double> objectives;  // per-iteration values, non-increasing
  int iterations = 0;
  bool converged = false;
};

// Target and per-user cascaded-power Gram terms plus the direct-path cross
// term.  The full received-power objective equals
//   psi^H m_mat psi + Re{psi^H m_vec} + sum_k ||h_d,k||^2.
InitProblem build_init_problem(const ChannelSet& ch);

// Riemannian conjugate gradient over the product-of-circles manifold,
// minimizing -psi^H M psi - Re{psi^H m} from the all-ones phase vector.
// Always returns the best iterate; stops on relative objective change below
// tol or on a vanishing Riemannian gradient.
RcgResult rcg_solve(const InitProblem& p, int max_iter = 200, double tol = 1e-8);

// Scales the optimized phases to the amplitude budget: phi = a_max * psi.
ReflectVector initial_phi(const CVec& psi, double a_max);

// Tangent-space projection of a Euclidean gradient at unit-modulus psi
// (removes the per-element radial component).  Exposed for tests.
CVec riemannian_gradient(const InitProblem& p, const CVec& psi);

}  // namespace arisac::initializer
