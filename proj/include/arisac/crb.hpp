#pragma once

#include <Eigen/Dense>

#include "arisac/model.hpp"
#include "arisac/phi_coefficients.hpp"

namespace arisac::crb {

using model::EchoModel;
using model::Precoder;
using model::ReflectVector;
using scenario::Scenario;

// Fisher information blocks for xi = [theta, Re alpha, Im alpha].
struct Fim {
  double m_tt = 0.0;                                   // M_theta,theta
  Eigen::RowVector2d m_ta = Eigen::RowVector2d::Zero();  // M_theta,alpha
  Eigen::Matrix2d m_aa = Eigen::Matrix2d::Zero();        // M_alpha,alpha (= c I_2)
  double alpha_sq = 0.0;

  Eigen::Matrix3d full() const {
    Eigen::Matrix3d m;
    m(0, 0) = m_tt;
    m.block<1, 2>(0, 1) = m_ta;
    m.block<2, 1>(1, 0) = m_ta.transpose();
    m.block<2, 2>(1, 1) = m_aa;
    return m;
  }
};

Fim fim(const EchoModel& em, const Precoder& w, const Scenario& sc, double alpha_sq);

// CRB_theta = [M_tt - M_ta M_aa^{-1} M_ta^T]^{-1}.  Throws on non-positive
// Schur complement (target unobservable).
double crb_theta(const Fim& f);

// Descent objective g of the trace form; CRB_theta = 1 / (2 L |alpha|^2 g).
// If the Q-energy denominator vanishes with a vanishing cross term, the
// first trace alone is returned and *degenerate_flag (if given) is set.
double g_trace(const EchoModel& em, const Precoder& w, bool* degenerate_flag = nullptr);

// Explicit quartic/fractional form of g(phi) from the R_1/R_2 expansion.
double g_phi_explicit(const PhiCoefficients& coeffs, const ReflectVector& phi);

}  // namespace arisac::crb
