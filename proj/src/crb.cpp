#include "arisac/crb.hpp"

#include <stdexcept>

namespace arisac::crb {

namespace {

// Tr{X R~_n^{-1}} via a Hermitian solve; no explicit inverse.
Complex trace_with_rn_inv(const Eigen::LLT<CMat>& llt, const CMat& x) {
  return llt.solve(x).trace();
}

}  // namespace

Fim fim(const EchoModel& em, const Precoder& w, const Scenario& sc, double alpha_sq) {
  Eigen::LLT<CMat> llt(em.r_n);
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("fim: echo noise covariance not positive definite");

  const CMat r_w = w.covariance();
  const double l = static_cast<double>(sc.n_samples);
  const double alpha = std::sqrt(alpha_sq);

  const Complex t_dd = trace_with_rn_inv(llt, em.q_dot * r_w * em.q_dot.adjoint());
  const Complex t_qd = trace_with_rn_inv(llt, em.q * r_w * em.q_dot.adjoint());
  const Complex t_qq = trace_with_rn_inv(llt, em.q * r_w * em.q.adjoint());

  Fim f;
  f.alpha_sq = alpha_sq;
  f.m_tt = 2.0 * l * alpha_sq * t_dd.real();
  // Re{alpha^* T [1, j]} with alpha taken real (phase does not affect CRB_theta).
  f.m_ta << 2.0 * l * alpha * t_qd.real(), -2.0 * l * alpha * t_qd.imag();
  f.m_aa = 2.0 * l * t_qq.real() * Eigen::Matrix2d::Identity();
  return f;
}

double crb_theta(const Fim& f) {
  const double c = f.m_aa(0, 0);
  double schur = f.m_tt;
  if (c > 0.0) {
    schur -= f.m_ta.squaredNorm() / c;
  } else if (f.m_ta.squaredNorm() > 0.0) {
    throw std::runtime_error("crb_theta: singular M_alpha,alpha with nonzero cross block");
  }
  if (schur <= 0.0)
    throw std::runtime_error("crb_theta: non-positive Schur complement (target unobservable)");
  return 1.0 / schur;
}

double g_trace(const EchoModel& em, const Precoder& w, bool* degenerate_flag) {
  Eigen::LLT<CMat> llt(em.r_n);
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("g_trace: echo noise covariance not positive definite");
  if (degenerate_flag) *degenerate_flag = false;

  const CMat r_w = w.covariance();
  const double t_dd = trace_with_rn_inv(llt, em.q_dot * r_w * em.q_dot.adjoint()).real();
  const Complex t_qd = trace_with_rn_inv(llt, em.q * r_w * em.q_dot.adjoint());
  const Complex t_qq = trace_with_rn_inv(llt, em.q * r_w * em.q.adjoint());

  const double den = t_qq.real();
  const double cross = std::norm(t_qd);
  const double scale = std::abs(t_dd) + cross + 1.0;
  if (den <= 1e-300 * scale) {
    if (cross > 1e-12 * scale)
      throw std::runtime_error("g_trace: zero Q-energy with nonzero cross term");
    if (degenerate_flag) *degenerate_flag = true;
    return t_dd;
  }
  return t_dd - cross / den;
}

double g_phi_explicit(const PhiCoefficients& coeffs, const ReflectVector& phi) {
  const int m = phi.m();
  CMat l = CMat::Zero(m, m);
  for (int i = 0; i < m; ++i) l(i, i) = static_cast<double>(i);

  const CVec& p = phi.phi;
  const double p_r1_p = (p.adjoint() * coeffs.r1 * p).value().real();
  const double p_r2_p = (p.adjoint() * coeffs.r2 * p).value().real();
  if (p_r1_p <= 0.0 || p_r2_p <= 0.0)
    throw std::runtime_error("g_phi_explicit: degenerate quadratic denominators");

  const double p_lr1l_p = (p.adjoint() * l * coeffs.r1 * l * p).value().real();
  const double p_lr2l_p = (p.adjoint() * l * coeffs.r2 * l * p).value().real();
  const Complex p_lr1_p = (p.adjoint() * l * coeffs.r1 * p).value();
  const Complex p_lr2_p = (p.adjoint() * l * coeffs.r2 * p).value();

  return coeffs.c0_sq *
         (p_r1_p * p_lr2l_p + p_r2_p * p_lr1l_p -
          p_r2_p * std::norm(p_lr1_p) / p_r1_p - p_r1_p * std::norm(p_lr2_p) / p_r2_p);
}

}  // namespace arisac::crb
