#include "arisac/model.hpp"

#include <stdexcept>

namespace arisac::model {

CVec compound_channel(int k, const ChannelSet& ch, const ReflectVector& phi) {
  // h_k^T = h_d,k^T + h_r,k^T Phi G  =>  h_k = h_d,k + G^T Phi h_r,k.
  return ch.h_d.at(k) + ch.g.transpose() * phi.phi.asDiagonal() * ch.h_r.at(k);
}

double sinr(int k, const ChannelSet& ch, const Precoder& w, const ReflectVector& phi,
            const Scenario& sc) {
  if (k < 0 || k >= static_cast<int>(ch.h_d.size()))
    throw std::out_of_range("sinr: user index out of range");
  const CVec h = compound_channel(k, ch, phi);
  const CVec gains = w.w.transpose() * h;  // gains(i) = h_k^T w_i
  double interference = 0.0;
  for (int i = 0; i < gains.size(); ++i)
    if (i != k) interference += std::norm(gains(i));
  const CVec hr_phi = phi.phi.asDiagonal() * ch.h_r[k];  // (h_r,k^T Phi)^T
  const double noise = hr_phi.squaredNorm() * sc.noise_ris + sc.noise_user;
  return std::norm(gains(k)) / (interference + noise);
}

double ris_power(const ChannelSet& ch, const Precoder& w, const ReflectVector& phi,
                 const Scenario& sc) {
  const auto Phi = phi.phi.asDiagonal();
  const CMat phi_g_w = Phi * ch.g * w.w;
  const CMat phi_hh_phi = Phi * ch.h_rt * (ch.h_rt.transpose() * Phi.toDenseMatrix());
  const double t1 = phi_g_w.squaredNorm();
  const double t2 = sc.rcs_var * (phi_hh_phi * ch.g * w.w).squaredNorm();
  const double t3 = sc.rcs_var * sc.noise_ris * phi_hh_phi.squaredNorm();
  const double t4 = 2.0 * sc.noise_ris * phi.phi.squaredNorm();
  return t1 + t2 + t3 + t4;
}

EchoModel echo_model(const ChannelSet& ch, const ReflectVector& phi, const Scenario& sc) {
  const int n = static_cast<int>(ch.g.cols());
  const int m = static_cast<int>(ch.g.rows());
  EchoModel em;

  em.l_diag = CMat::Zero(m, m);
  for (int i = 0; i < m; ++i) em.l_diag(i, i) = static_cast<double>(i);
  em.a_diag = scenario::steering(m, ch.theta).asDiagonal().toDenseMatrix();
  // Steering entries are e^{-j pi i sin(theta)}, so d a/d theta =
  // -j pi cos(theta) L a; the minus sign propagates into c0 (verified
  // against a finite difference of Q over theta).
  em.c0 = -ch.alpha_rt * ch.alpha_rt * kImag * M_PI * std::cos(ch.theta);

  const auto Phi = phi.phi.asDiagonal();
  const CVec q_vec = ch.g.transpose() * Phi * scenario::steering(m, ch.theta);
  em.q = (ch.alpha_rt * ch.alpha_rt) * q_vec * q_vec.transpose();

  // Q_dot = c0 G^T A (L phi phi^T + phi phi^T L) A G.
  const CMat outer = phi.phi * phi.phi.transpose();
  em.q_dot = em.c0 * ch.g.transpose() * em.a_diag *
             (em.l_diag * outer + outer * em.l_diag) * em.a_diag * ch.g;

  em.r_n = sc.noise_ris * ch.g.transpose() * Phi * Phi.toDenseMatrix().adjoint() *
               ch.g.conjugate() +
           sc.noise_bs * CMat::Identity(n, n);
  // Force exact Hermitian symmetry against rounding.
  em.r_n = 0.5 * (em.r_n + em.r_n.adjoint()).eval();
  return em;
}

}  // namespace arisac::model
