#include "arisac/precoder.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <stdexcept>

namespace arisac::precoder {

PrecoderSubproblemConstants subproblem_constants(const ChannelSet& ch,
                                                 const ReflectVector& phi,
                                                 const Scenario& sc) {
  PrecoderSubproblemConstants c;
  const auto Phi = phi.phi.asDiagonal();
  const CMat phi_g = Phi * ch.g;  // Phi G

  // E = G^H Phi^H Phi G + sigma_t^2 ||Phi h_rt||^2 (G^T Phi h_rt)* (G^T Phi h_rt)^T.
  const CVec u = ch.g.transpose() * Phi * ch.h_rt;
  const double phi_hrt_sq = (Phi * ch.h_rt).squaredNorm();
  c.e_mat = phi_g.adjoint() * phi_g +
            sc.rcs_var * phi_hrt_sq * (u.conjugate() * u.transpose());
  c.e_mat = 0.5 * (c.e_mat + c.e_mat.adjoint()).eval();

  // c_r = sigma_t^2 sigma_z^2 ||Phi h_rt h_rt^T Phi||_F^2 + 2 sigma_z^2 ||Phi||_F^2.
  c.c_r = sc.rcs_var * sc.noise_ris * phi_hrt_sq * phi_hrt_sq +
          2.0 * sc.noise_ris * phi.phi.squaredNorm();

  const int k = static_cast<int>(ch.h_d.size());
  c.c_s.resize(k);
  c.h_compound.resize(k);
  for (int i = 0; i < k; ++i) {
    c.h_compound[i] = model::compound_channel(i, ch, phi);
    c.c_s[i] =
        phi.phi.cwiseProduct(ch.h_r[i]).squaredNorm() * sc.noise_ris + sc.noise_user;
  }
  return c;
}

WSdr build_w_sdr(const EchoModel& em, const PrecoderSubproblemConstants& consts,
                 const Scenario& sc) {
  if (sc.p_ris <= consts.c_r)
    throw std::invalid_argument(
        "build_w_sdr: static RIS power draw (" + std::to_string(consts.c_r) +
        " W) meets or exceeds the RIS budget (" + std::to_string(sc.p_ris) +
        " W); reduce the surface amplitude");

  const int n = static_cast<int>(em.r_n.rows());
  const int k = static_cast<int>(consts.h_compound.size());
  if (static_cast<int>(sc.sinr_targets.size()) < k)
    throw std::invalid_argument("build_w_sdr: missing SINR targets");

  WSdr out;
  auto& p = out.program;
  out.w_k.reserve(k);
  for (int i = 0; i < k; ++i) out.w_k.push_back(p.add_hermitian("W" + std::to_string(i), n));
  out.r_w = p.add_hermitian("R_w", n);
  out.t_w = p.add_real("t_w");
  p.maximize(p.scalar(out.t_w));

  // Coefficient matrices of the three bilinear traces in the 2x2 block.
  Eigen::LLT<CMat> llt(em.r_n);
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("build_w_sdr: echo noise covariance not positive definite");
  const CMat rinv_qdot = llt.solve(em.q_dot);
  const CMat rinv_q = llt.solve(em.q);
  CMat m_a = em.q_dot.adjoint() * rinv_qdot;  // Tr{R_w m_a} = Tr{Qdot R_w Qdot^H Rn^-1}
  CMat m_c = em.q.adjoint() * rinv_q;         // Tr{R_w m_c} = Tr{Q R_w Q^H Rn^-1}
  const CMat m_b = em.q_dot.adjoint() * rinv_q;  // Tr{R_w m_b} = Tr{Q R_w Qdot^H Rn^-1}
  m_a = 0.5 * (m_a + m_a.adjoint()).eval();
  m_c = 0.5 * (m_c + m_c.adjoint()).eval();
  const CMat m_b_re = 0.5 * (m_b + m_b.adjoint());
  const CMat m_b_im = (m_b - m_b.adjoint()) / (2.0 * kImag);

  const conic::LinTerm a_expr = p.tr_herm(out.r_w, m_a);
  out.zero_echo = em.q.cwiseAbs().maxCoeff() == 0.0;
  if (out.zero_echo) {
    // Q = 0 kills both the off-diagonal and the lower-right trace; the block
    // collapses to t_w <= Tr{R_w m_a} (itself zero when Qdot = 0 too).
    p.add_nonneg(a_expr - p.scalar(out.t_w), "sensing-epigraph");
  } else {
    p.add_rsoc(a_expr - p.scalar(out.t_w), p.tr_herm(out.r_w, m_c),
               {p.tr_herm(out.r_w, m_b_re), p.tr_herm(out.r_w, m_b_im)},
               "sensing-schur");
  }

  p.add_nonneg(p.constant(sc.p_bs) - p.tr_herm(out.r_w, CMat::Identity(n, n)),
               "bs-power");
  p.add_nonneg(p.constant(sc.p_ris - consts.c_r) - p.tr_herm(out.r_w, consts.e_mat),
               "ris-power");

  for (int i = 0; i < k; ++i) {
    // (1 + 1/gamma) h^T W_i h^* >= h^T R_w h^* + c_s.
    const CVec hc = consts.h_compound[i].conjugate();
    const CMat outer = hc * hc.adjoint();  // h^T X h^* = Tr{X outer}
    p.add_nonneg((1.0 + 1.0 / sc.sinr_targets[i]) * p.tr_herm(out.w_k[i], outer) -
                     p.tr_herm(out.r_w, outer) - p.constant(consts.c_s[i]),
                 "sinr-" + std::to_string(i));
  }

  for (int i = 0; i < k; ++i)
    p.add_psd(p.herm_expr(out.w_k[i]), "W" + std::to_string(i) + "-psd");
  p.add_psd(p.herm_expr(out.r_w), "R_w-psd");

  conic::HermAffine dominance = p.herm_expr(out.r_w);
  for (int i = 0; i < k; ++i) p.herm_axpy(dominance, out.w_k[i], -1.0);
  p.add_psd(dominance, "covariance-dominance");

  return out;
}

Precoder recover_w(const WSdr& sdr, const conic::ConicSolution& sol,
                   const PrecoderSubproblemConstants& consts,
                   RecoveryDiagnostics* diag) {
  const auto& p = sdr.program;
  const CMat r_w = p.value_hermitian(sol, sdr.r_w);
  const int n = static_cast<int>(r_w.rows());
  const int k = static_cast<int>(sdr.w_k.size());

  if (diag) {
    diag->lifted_rank.clear();
    diag->min_residual_eig = 0.0;
  }

  Precoder w;
  w.w = CMat::Zero(n, k + n);
  CMat residual = r_w;
  for (int i = 0; i < k; ++i) {
    const CMat wk = p.value_hermitian(sol, sdr.w_k[i]);
    const CVec hc = consts.h_compound[i].conjugate();
    const double s = (hc.adjoint() * wk * hc).value().real();
    if (s <= 0.0)
      throw std::runtime_error("recover_w: user " + std::to_string(i) +
                               " receives no power from its lifted beamformer");
    // w_k W_k h / sqrt(h^H W_k h): the rank-one outer product is dominated by
    // W_k (Schur complement), so the radar residual below stays PSD for any
    // feasible lifted point, and the per-user signal power h^H w w^H h is
    // preserved exactly.
    w.w.col(i) = wk * hc / std::sqrt(s);
    residual -= w.w.col(i) * w.w.col(i).adjoint();

    if (diag) {
      Eigen::SelfAdjointEigenSolver<CMat> es(wk, Eigen::EigenvaluesOnly);
      const double top = es.eigenvalues().cwiseAbs().maxCoeff();
      int rank = 0;
      for (int j = 0; j < n; ++j)
        if (es.eigenvalues()(j) > 1e-8 * top) ++rank;
      diag->lifted_rank.push_back(rank);
    }
  }

  residual = 0.5 * (residual + residual.adjoint()).eval();
  Eigen::SelfAdjointEigenSolver<CMat> es(residual);
  // Anchor the clipping band to the covariance scale: a numerically zero
  // residual is pure rounding noise and must clip cleanly.
  const double scale = std::max(es.eigenvalues().cwiseAbs().maxCoeff(), r_w.norm());
  RVec vals = es.eigenvalues();
  for (int j = 0; j < n; ++j) {
    if (vals(j) < -1e-8 * scale)
      throw std::runtime_error(
          "recover_w: radar residual has eigenvalue " + std::to_string(vals(j)) +
          " beyond the clipping band (rank-one relaxation not tight)");
    // Rounding-level eigenvalues of either sign are noise; zero them so an
    // exactly rank-deficient residual factors to exact zeros.
    if (vals(j) < 1e-8 * scale) vals(j) = 0.0;
  }
  if (diag && n > 0) diag->min_residual_eig = scale > 0.0 ? es.eigenvalues().minCoeff() / scale : 0.0;
  w.w.rightCols(n) = es.eigenvectors() * vals.cwiseSqrt().asDiagonal();
  return w;
}

}  // namespace arisac::precoder
