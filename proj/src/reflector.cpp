#include "arisac/reflector.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>
#include <unsupported/Eigen/KroneckerProduct>

#include "arisac/conic/barrier_solver.hpp"
#include "arisac/rng.hpp"

namespace arisac::reflector {

namespace {

CVec vec_of(const CMat& m) {
  return Eigen::Map<const CVec>(m.data(), m.size());
}

CMat unvec(const CVec& v, int m) {
  return Eigen::Map<const CMat>(v.data(), m, m);
}

// v = phi* kron phi = vec{phi phi^H}
CVec lifted_vec(const CVec& phi) {
  return vec_of(CMat(phi * phi.adjoint()));
}

RVec embed(const CVec& z) {
  RVec r(2 * z.size());
  r << z.real(), z.imag();
  return r;
}

CVec lift(const RVec& r) {
  const int n = static_cast<int>(r.size()) / 2;
  return r.head(n) + kImag * r.tail(n);
}

// Real 2n x 2n representation of a complex linear operator.
RMat embed_op(const CMat& c) {
  const int n = static_cast<int>(c.rows());
  RMat r(2 * n, 2 * n);
  r.topLeftCorner(n, n) = c.real();
  r.topRightCorner(n, n) = -c.imag();
  r.bottomLeftCorner(n, n) = c.imag();
  r.bottomRightCorner(n, n) = c.real();
  return r;
}

CVec ladder(int m) {
  CVec l(m);
  for (int i = 0; i < m; ++i) l(i) = Complex(i, 0.0);
  return l;
}

// Xi_i = L R_ihat^T kron L R_ihat applied via (B^T kron A) vec{Z} = vec{A Z B}.
CVec apply_bigxi(const PhiCoefficients& c, int i, const CVec& z) {
  const CMat& rhat = (i == 0) ? c.r2 : c.r1;
  const int m = static_cast<int>(rhat.rows());
  const CVec l = ladder(m);
  const CMat zm = unvec(z, m);
  return vec_of(CMat(l.asDiagonal() * rhat * zm * rhat * l.asDiagonal()));
}

CVec apply_bigxi_adj(const PhiCoefficients& c, int i, const CVec& z) {
  const CMat& rhat = (i == 0) ? c.r2 : c.r1;
  const int m = static_cast<int>(rhat.rows());
  const CVec l = ladder(m);
  const CMat zm = unvec(z, m);
  return vec_of(CMat(rhat * l.asDiagonal() * zm * l.asDiagonal() * rhat));
}

// F = L R2^T L kron R1 + L R1^T L kron R2 (Hermitian).
CVec apply_f(const PhiCoefficients& c, const CVec& z) {
  const int m = static_cast<int>(c.r1.rows());
  const CVec l = ladder(m);
  const CMat zm = unvec(z, m);
  const CMat lr2l = l.asDiagonal() * c.r2 * l.asDiagonal();
  const CMat lr1l = l.asDiagonal() * c.r1 * l.asDiagonal();
  return vec_of(CMat(c.r1 * zm * lr2l + c.r2 * zm * lr1l));
}

double clamp0(double x) { return x > 0.0 ? x : 0.0; }

double dense_max_eig(const RMat& sym) {
  if (sym.rows() == 0) return 0.0;
  const RMat s = 0.5 * (sym + sym.transpose());
  if (!s.allFinite())
    throw std::runtime_error("reflector: non-finite curvature matrix");
  const double scale = s.cwiseAbs().maxCoeff();
  if (scale == 0.0) return 0.0;
  // The tridiagonal QL iteration can fail to converge on matrices with a very
  // wide dynamic range; normalizing fixes most such cases.
  Eigen::SelfAdjointEigenSolver<RMat> es(RMat(s / scale),
                                         Eigen::EigenvaluesOnly);
  if (es.info() == Eigen::Success) return scale * es.eigenvalues().maxCoeff();
  // Callers use the result as a curvature bound, so any upper bound on the
  // top eigenvalue stays sound; fall back to the row-sum norm.
  return s.cwiseAbs().rowwise().sum().maxCoeff();
}

// Dominant (largest-magnitude) eigenvalue of a symmetric operator; returns
// the signed Rayleigh quotient at convergence.
double power_dominant(const std::function<RVec(const RVec&)>& apply, int dim) {
  RVec z = RVec::LinSpaced(dim, 1.0, 2.0).normalized();
  double prev = 0.0;
  for (int it = 0; it < 2000; ++it) {
    const RVec hz = apply(z);
    const double r = z.dot(hz);
    const double n = hz.norm();
    if (n < 1e-300) return 0.0;
    z = hz / n;
    if (it > 3 && std::abs(r - prev) <= 1e-11 * (1.0 + std::abs(r))) return r;
    prev = r;
  }
  return prev;
}

// Largest (signed) eigenvalue via a spectral shift: power iteration alone
// converges to the largest magnitude, which may be the negative end.
double power_max_eig(const std::function<RVec(const RVec&)>& apply, int dim) {
  const double radius = std::abs(power_dominant(apply, dim));
  if (radius == 0.0) return 0.0;
  const double shift = 2.0 * radius;
  const double mu = power_dominant(
      [&](const RVec& z) { return RVec(apply(z) + shift * z); }, dim);
  return mu - shift;
}

// S with S^H S = m for Hermitian PSD m (rounding-level negatives clamped).
CMat herm_sqrt(const CMat& m) {
  Eigen::SelfAdjointEigenSolver<CMat> es(0.5 * (m + m.adjoint()));
  if (es.info() != Eigen::Success)
    throw std::runtime_error("reflector: matrix square root failed");
  const RVec vals = es.eigenvalues().cwiseMax(0.0);
  return vals.cwiseSqrt().asDiagonal() * es.eigenvectors().adjoint();
}

}  // namespace

PhiCoefficients compute_phi_coefficients(const EchoModel& em, const Precoder& w,
                                         const CMat& psi, const ChannelSet& ch,
                                         int kron_cap) {
  PhiCoefficients c;
  const int m = static_cast<int>(ch.g.rows());

  Eigen::LLT<CMat> llt(psi);
  if (llt.info() != Eigen::Success)
    throw std::runtime_error(
        "compute_phi_coefficients: frozen echo-noise covariance is singular");

  const CMat ga = ch.g.transpose() * em.a_diag;  // G^T A, N x M
  c.r1 = ga.adjoint() * w.covariance().conjugate() * ga;
  c.r2 = ga.adjoint() * llt.solve(ga);
  c.r1 = 0.5 * (c.r1 + c.r1.adjoint()).eval();
  c.r2 = 0.5 * (c.r2 + c.r2.adjoint()).eval();

  Eigen::SelfAdjointEigenSolver<CMat> es2(c.r2, Eigen::EigenvaluesOnly);
  c.r2_positive = es2.eigenvalues().minCoeff() >
                  1e-12 * std::max(1e-300, es2.eigenvalues().maxCoeff());

  c.xi1 = vec_of(CMat(c.r1.adjoint()));
  c.xi2 = vec_of(CMat(c.r2.adjoint()));
  c.c0_sq = std::norm(em.c0);
  c.psi = psi;

  if (m <= kron_cap) {
    const CVec l = ladder(m);
    const CMat lr1 = l.asDiagonal() * c.r1;
    const CMat lr2 = l.asDiagonal() * c.r2;
    const CMat lr1t = l.asDiagonal() * c.r1.transpose();
    const CMat lr2t = l.asDiagonal() * c.r2.transpose();
    c.bigxi1 = Eigen::kroneckerProduct(lr2t, lr2).eval();
    c.bigxi2 = Eigen::kroneckerProduct(lr1t, lr1).eval();
    c.f1 = Eigen::kroneckerProduct(CMat(lr2 * l.asDiagonal()).transpose(), c.r1).eval();
    c.f2 = Eigen::kroneckerProduct(CMat(lr1 * l.asDiagonal()).transpose(), c.r2).eval();
    c.f = c.f1 + c.f2;
    c.kron_materialized = true;
  }
  return c;
}

SinrPhiConstants compute_sinr_phi_constants(const ChannelSet& ch, const Precoder& w,
                                            const Scenario& sc) {
  SinrPhiConstants out;
  const int m = static_cast<int>(ch.g.rows());
  const int k_users = static_cast<int>(ch.h_d.size());
  const int cols = w.columns();
  if (static_cast<int>(sc.sinr_targets.size()) < k_users)
    throw std::invalid_argument("compute_sinr_phi_constants: missing SINR targets");

  out.a.assign(k_users, std::vector<Complex>(cols));
  out.b.assign(k_users, std::vector<CVec>(cols));
  out.c_mat.assign(k_users, CMat::Zero(m, m));
  out.d_vec.assign(k_users, CVec::Zero(m));
  out.c_phi.assign(k_users, 0.0);

  std::vector<CVec> gw(cols);
  for (int i = 0; i < cols; ++i) gw[i] = ch.g * w.w.col(i);

  for (int k = 0; k < k_users; ++k) {
    const double gain = 1.0 + 1.0 / sc.sinr_targets[k];
    for (int i = 0; i < cols; ++i) {
      out.a[k][i] = (ch.h_d[k].transpose() * w.w.col(i)).value();
      out.b[k][i] = gw[i].cwiseProduct(ch.h_r[k]);
      out.c_mat[k] += out.b[k][i].conjugate() * out.b[k][i].transpose();
      out.d_vec[k] += 2.0 * out.a[k][i] * out.b[k][i].conjugate();
      out.c_phi[k] += std::norm(out.a[k][i]);
    }
    out.d_vec[k] -= 2.0 * gain * out.a[k][k] * out.b[k][k].conjugate();
    out.c_phi[k] += -gain * std::norm(out.a[k][k]) + sc.noise_user;
    out.c_mat[k] += sc.noise_ris *
                    CMat(ch.h_r[k].conjugate().asDiagonal() * CMat(ch.h_r[k].asDiagonal()));
    out.c_mat[k] = 0.5 * (out.c_mat[k] + out.c_mat[k].adjoint()).eval();
  }

  out.j_mat = CMat::Zero(m, m);
  out.k_ris_mat = 2.0 * sc.noise_ris * CMat::Identity(m, m);
  for (int i = 0; i < cols; ++i) {
    const CVec y = gw[i].cwiseProduct(ch.h_rt);
    out.j_mat += y.conjugate() * y.transpose();
    out.k_ris_mat += CMat(gw[i].cwiseAbs2().cast<Complex>().asDiagonal());
  }
  out.j_mat *= sc.rcs_var * ch.alpha_rt * ch.alpha_rt;
  out.j_mat = 0.5 * (out.j_mat + out.j_mat.adjoint()).eval();
  out.quartic_noise_coeff =
      sc.rcs_var * sc.noise_ris * std::pow(ch.alpha_rt, 4.0);
  return out;
}

std::pair<double, double> update_t(const PhiCoefficients& coeffs,
                                   const ReflectVector& phi) {
  const CVec& ph = phi.phi;
  const CVec v = lifted_vec(ph);
  const Complex den1 = (ph.adjoint() * coeffs.r1 * ph).value();
  const Complex den2 = (ph.adjoint() * coeffs.r2 * ph).value();
  if (den1.real() <= 0.0 || den2.real() <= 0.0)
    throw std::runtime_error("update_t: degenerate denominator");

  double t[2];
  for (int i = 0; i < 2; ++i) {
    const CVec& xi = (i == 0) ? coeffs.xi1 : coeffs.xi2;
    const Complex num = xi.dot(v) * v.dot(apply_bigxi(coeffs, i, v));
    const Complex tc = num / ((i == 0) ? den2 : den1);
    if (std::abs(tc.imag()) > 1e-8 * (1.0 + std::abs(tc)))
      throw std::runtime_error(
          "update_t: fractional level has imaginary residue " +
          std::to_string(tc.imag()) + " (coefficient assembly is inconsistent)");
    t[i] = tc.real();
  }
  return {t[0], t[1]};
}

SurrogatePack build_surrogates(const PhiCoefficients& coeffs,
                               const SinrPhiConstants& sinr_consts, double t1,
                               double t2, const ReflectVector& phi_s,
                               const Scenario& sc, double safety) {
  const int m = phi_s.m();
  const CVec& ph = phi_s.phi;
  const CVec v_s = lifted_vec(ph);
  const RVec vbar = embed(v_s);
  const RVec phbar = embed(ph);
  const RMat eye2m = RMat::Identity(2 * m, 2 * m);

  SurrogatePack p;
  p.anchor = ph;
  p.safety = safety;
  p.t[0] = t1;
  p.t[1] = t2;

  // Objective: -v^H F v linearized at v_s, then its indefinite quadratic
  // Re{phi^H F~ phi} majorized with the top curvature of the real embedding.
  const CVec fvec = -2.0 * apply_f(coeffs, v_s);
  const RMat fbar = embed_op(unvec(fvec, m));
  p.lambda1_tilde = clamp0(safety * dense_max_eig(fbar + fbar.transpose()));
  p.f_tilde = lift(RVec((fbar + fbar.transpose() - p.lambda1_tilde * eye2m) * phbar));
  const double c1 = v_s.dot(apply_f(coeffs, v_s)).real();
  p.c2 = -phbar.dot(fbar.transpose() * phbar) +
         0.5 * p.lambda1_tilde * phbar.squaredNorm() + c1;

  // Fractional rows: the sextic numerator is majorized in the lifted real
  // space, pulled back to phi with the amplitude-box bound on ||v||^2, then
  // majorized once more; the quadratic denominator is linearized.
  const double box4 = static_cast<double>(m) * m * std::pow(sc.a_max, 4.0);
  for (int i = 0; i < 2; ++i) {
    const CVec& xi = (i == 0) ? coeffs.xi1 : coeffs.xi2;
    const RVec xibar = embed(xi);
    const CVec xi_v = apply_bigxi(coeffs, i, v_s);
    const RVec pbar = embed(CVec(xi_v + apply_bigxi_adj(coeffs, i, v_s)));
    const double s_i = xibar.dot(vbar);           // Re{xi^H v}
    const double q_i = vbar.dot(embed(xi_v));     // Re{v^H Xi v}

    double lam;
    if (coeffs.kron_materialized) {
      const RMat xibar_op = embed_op((i == 0) ? coeffs.bigxi1 : coeffs.bigxi2);
      const RMat hess = pbar * xibar.transpose() + xibar * pbar.transpose() +
                        s_i * (xibar_op + xibar_op.transpose());
      lam = dense_max_eig(hess);
    } else {
      lam = power_max_eig(
          [&](const RVec& z) {
            const CVec zc = lift(z);
            const RVec pz = embed(CVec(apply_bigxi(coeffs, i, zc) +
                                       apply_bigxi_adj(coeffs, i, zc)));
            return RVec(pbar * xibar.dot(z) + xibar * pbar.dot(z) + s_i * pz);
          },
          2 * m * m);
    }
    lam = clamp0(safety * lam);
    p.lambda_y[i] = lam;

    const RVec grad = s_i * pbar + q_i * xibar;
    const double x_i = s_i * q_i - grad.dot(vbar) + 0.5 * lam * vbar.squaredNorm();
    const CMat omega = unvec(lift(RVec(grad - lam * vbar)), m);
    const RMat obar = embed_op(omega);
    const double lamt = clamp0(safety * dense_max_eig(obar + obar.transpose()));
    p.lambda_y_tilde[i] = lamt;
    p.ell_tilde[i] = lift(RVec((obar + obar.transpose() - lamt * eye2m) * phbar));
    p.x_tilde[i] = -phbar.dot(obar.transpose() * phbar) +
                   0.5 * lamt * phbar.squaredNorm() + 0.5 * lam * box4 + x_i;

    const CMat& rhat = (i == 0) ? coeffs.r2 : coeffs.r1;
    const CVec varrho = -2.0 * (rhat * ph);
    const double kappa = (ph.adjoint() * rhat * ph).value().real();
    const double ti = (i == 0) ? t1 : t2;
    p.varrho_tilde[i] = p.ell_tilde[i] + ti * varrho;
    p.kappa_tilde[i] = p.x_tilde[i] + ti * kappa;
  }

  // SINR rows: only the concave desired-signal quadratic is linearized.
  const int k_users = static_cast<int>(sinr_consts.c_mat.size());
  p.d_tilde.resize(k_users);
  p.c_phi_tilde.resize(k_users);
  for (int k = 0; k < k_users; ++k) {
    const CVec& bkk = sinr_consts.b[k][k];
    const Complex bphi = (bkk.transpose() * ph).value();
    const double gain = 1.0 + 1.0 / sc.sinr_targets[k];
    p.d_tilde[k] = sinr_consts.d_vec[k] - 2.0 * gain * bphi * bkk.conjugate();
    p.c_phi_tilde[k] = sinr_consts.c_phi[k] + gain * std::norm(bphi);
  }
  return p;
}

PhiQcqp build_phi_qcqp(const SurrogatePack& pack, const SinrPhiConstants& sinr_consts,
                       const Scenario& sc) {
  const int m = static_cast<int>(pack.anchor.size());
  const double c3 =
      sinr_consts.quartic_noise_coeff * m * m * std::pow(sc.a_max, 4.0);
  if (c3 >= sc.p_ris) {
    const double implied = std::pow(
        sc.p_ris / (sinr_consts.quartic_noise_coeff * m * m), 0.25);
    throw std::invalid_argument(
        "build_phi_qcqp: amplified-noise floor " + std::to_string(c3) +
        " W exceeds the RIS budget; maximum feasible amplitude cap is " +
        std::to_string(implied));
  }

  PhiQcqp q;
  auto& pr = q.program;
  q.phi = pr.add_complex("phi", m);
  q.norm_epi = pr.add_real("phi_norm_sq");

  auto coord_rows = [&](const CMat& s_mat) {
    std::vector<conic::LinTerm> rows;
    rows.reserve(2 * s_mat.rows());
    for (int r = 0; r < s_mat.rows(); ++r) {
      const CVec c = s_mat.row(r).conjugate().transpose();
      rows.push_back(pr.cplx_inner_re(q.phi, c));
      rows.push_back(pr.cplx_inner_im(q.phi, c));
    }
    return rows;
  };

  pr.minimize(0.5 * pack.lambda1_tilde * pr.scalar(q.norm_epi) +
              pr.cplx_inner_re(q.phi, pack.f_tilde));

  // norm_epi >= phi^H phi, capped by the box so it cannot drift.
  pr.add_rsoc(pr.scalar(q.norm_epi), pr.constant(1.0),
              coord_rows(CMat::Identity(m, m)), "norm-epigraph");
  pr.add_nonneg(pr.constant(m * sc.a_max * sc.a_max) - pr.scalar(q.norm_epi),
                "norm-cap");

  const CMat k_tilde =
      sinr_consts.k_ris_mat + m * sc.a_max * sc.a_max * sinr_consts.j_mat;
  pr.add_soc(pr.constant(std::sqrt(sc.p_ris - c3)), coord_rows(herm_sqrt(k_tilde)),
             "ris-power");

  const int k_users = static_cast<int>(sinr_consts.c_mat.size());
  for (int k = 0; k < k_users; ++k) {
    pr.add_rsoc(-1.0 * pr.cplx_inner_re(q.phi, pack.d_tilde[k]) -
                    pr.constant(pack.c_phi_tilde[k]),
                pr.constant(1.0), coord_rows(herm_sqrt(sinr_consts.c_mat[k])),
                "sinr-" + std::to_string(k));
  }

  for (int i = 0; i < 2; ++i) {
    pr.add_nonneg(-0.5 * pack.lambda_y_tilde[i] * pr.scalar(q.norm_epi) -
                      pr.cplx_inner_re(q.phi, pack.varrho_tilde[i]) -
                      pr.constant(pack.kappa_tilde[i]),
                  "fraction-" + std::to_string(i));
  }

  for (int j = 0; j < m; ++j) {
    const CVec e = CVec::Unit(m, j);
    pr.add_soc(pr.constant(sc.a_max),
               {pr.cplx_inner_re(q.phi, e), pr.cplx_inner_im(q.phi, e)},
               "amp-" + std::to_string(j));
  }
  return q;
}

CMat update_psi(const ReflectVector& phi, const ChannelSet& ch, const Scenario& sc) {
  const int n = static_cast<int>(ch.g.cols());
  const CMat gt_phi = ch.g.transpose() * phi.lift();
  return sc.noise_ris * gt_phi * gt_phi.adjoint() +
         sc.noise_bs * CMat::Identity(n, n);
}

double quartic_term(const PhiCoefficients& coeffs, const CVec& phi) {
  const CVec v = lifted_vec(phi);
  return -v.dot(apply_f(coeffs, v)).real();
}

double true_fraction_row(const PhiCoefficients& coeffs, int i, double t_i,
                         const CVec& phi) {
  const CVec v = lifted_vec(phi);
  const CVec& xi = (i == 0) ? coeffs.xi1 : coeffs.xi2;
  const CMat& rhat = (i == 0) ? coeffs.r2 : coeffs.r1;
  const Complex num = xi.dot(v) * v.dot(apply_bigxi(coeffs, i, v));
  const double den = (phi.adjoint() * rhat * phi).value().real();
  return num.real() - t_i * den;
}

double inner_objective(const PhiCoefficients& coeffs, const CVec& phi) {
  const CVec v = lifted_vec(phi);
  const double den1 = (phi.adjoint() * coeffs.r1 * phi).value().real();
  const double den2 = (phi.adjoint() * coeffs.r2 * phi).value().real();
  if (den1 <= 0.0 || den2 <= 0.0)
    throw std::runtime_error("inner_objective: degenerate denominator");
  const double num1 = (coeffs.xi1.dot(v) * v.dot(apply_bigxi(coeffs, 0, v))).real();
  const double num2 = (coeffs.xi2.dot(v) * v.dot(apply_bigxi(coeffs, 1, v))).real();
  return num1 / den2 + num2 / den1 - v.dot(apply_f(coeffs, v)).real();
}

double surrogate_objective(const SurrogatePack& pack, const CVec& phi) {
  return 0.5 * pack.lambda1_tilde * phi.squaredNorm() +
         phi.dot(pack.f_tilde).real() + pack.c2;
}

double surrogate_fraction_row(const SurrogatePack& pack, int i, const CVec& phi) {
  return 0.5 * pack.lambda_y_tilde[i] * phi.squaredNorm() +
         phi.dot(pack.varrho_tilde[i]).real() + pack.kappa_tilde[i];
}

double true_sinr_row(const SinrPhiConstants& consts, const Scenario& sc, int k,
                     const CVec& phi) {
  const double quad = (phi.adjoint() * consts.c_mat[k] * phi).value().real();
  const double lin = consts.d_vec[k].dot(phi).real();
  const Complex bphi = (consts.b[k][k].transpose() * phi).value();
  const double gain = 1.0 + 1.0 / sc.sinr_targets[k];
  return quad + lin + consts.c_phi[k] - gain * std::norm(bphi);
}

double surrogate_sinr_row(const SurrogatePack& pack, const SinrPhiConstants& consts,
                          int k, const CVec& phi) {
  const double quad = (phi.adjoint() * consts.c_mat[k] * phi).value().real();
  return quad + pack.d_tilde[k].dot(phi).real() + pack.c_phi_tilde[k];
}

double relaxed_ris_power(const SinrPhiConstants& consts, const Scenario& sc,
                         const CVec& phi) {
  const int m = static_cast<int>(phi.size());
  const CMat k_tilde =
      consts.k_ris_mat + m * sc.a_max * sc.a_max * consts.j_mat;
  const double c3 = consts.quartic_noise_coeff * m * m * std::pow(sc.a_max, 4.0);
  return (phi.adjoint() * k_tilde * phi).value().real() + c3;
}

double max_sym_embedding_eig(const CMat& m) {
  const RMat e = embed_op(m);
  return dense_max_eig(e + e.transpose());
}

InnerResult run_inner_loop(const ChannelSet& ch, const Precoder& w,
                           const ReflectVector& phi0, const Scenario& sc,
                           const InnerOptions& opts, conic::SolverBackend* backend) {
  conic::BarrierSolver fallback_solver;
  conic::SolverBackend& be = backend ? *backend : fallback_solver;

  InnerResult res;
  ReflectVector phi = phi0;
  CMat psi = update_psi(phi, ch, sc);
  // Only the phi-independent pieces (A, L, c0) of the echo model are used.
  const EchoModel em = model::echo_model(ch, phi0, sc);
  const SinrPhiConstants sconsts = compute_sinr_phi_constants(ch, w, sc);

  Rng rng(opts.domination_seed);
  auto gstream = rng.stream(1);
  const int m = phi.m();

  double prev_obj = std::numeric_limits<double>::quiet_NaN();
  for (int it = 0; it < opts.max_iters; ++it) {
    bool stepped = false;
    bool exit_loop = false;
    for (int attempt = 0; attempt < 2 && !stepped; ++attempt) {
      const PhiCoefficients coeffs =
          compute_phi_coefficients(em, w, psi, ch, opts.kron_cap);
      const auto [t1, t2] = update_t(coeffs, phi);

      // Doubling the curvature safety factor also hardens a retry after a
      // solver failure (flatter majorizers keep the step closer to the anchor).
      double safety = opts.lambda_safety * (attempt == 0 ? 1.0 : 2.0);
      SurrogatePack pack;
      for (int refresh = 0;; ++refresh) {
        pack = build_surrogates(coeffs, sconsts, t1, t2, phi, sc, safety);
        if (!opts.check_domination || refresh >= 6) break;
        bool violated = false;
        for (int s = 0; s < opts.domination_samples && !violated; ++s) {
          CVec probe(m);
          for (int j = 0; j < m; ++j)
            probe(j) = std::polar(sc.a_max * uniform01(gstream),
                                  2.0 * M_PI * uniform01(gstream));
          const double tol_obj = 1e-8 * (1.0 + std::abs(quartic_term(coeffs, probe)));
          if (surrogate_objective(pack, probe) <
              quartic_term(coeffs, probe) - tol_obj)
            violated = true;
          for (int i = 0; i < 2 && !violated; ++i) {
            const double truth = true_fraction_row(coeffs, i, pack.t[i], probe);
            if (surrogate_fraction_row(pack, i, probe) <
                truth - 1e-8 * (1.0 + std::abs(truth)))
              violated = true;
          }
        }
        if (!violated) break;
        safety *= 2.0;
      }

      InnerTraceRecord rec;
      rec.iter = it;
      rec.lambda1 = pack.lambda1_tilde;
      rec.lambda_y1 = pack.lambda_y_tilde[0];
      rec.lambda_y2 = pack.lambda_y_tilde[1];
      rec.objective_before = inner_objective(coeffs, phi.phi);

      PhiQcqp q = build_phi_qcqp(pack, sconsts, sc);
      const conic::ConicSolution sol = q.program.solve(be, 1e-8);
      if (sol.status != conic::SolveStatus::Optimal) {
        rec.status = attempt == 0 ? "step-failed-retry" : "step-failed-exit";
        rec.objective_after = rec.objective_before;
        res.trace.push_back(rec);
        if (attempt == 0) {
          psi = update_psi(phi, ch, sc);
          continue;
        }
        exit_loop = true;
        break;
      }

      CVec cand = q.program.value_complex(sol, q.phi);
      for (int j = 0; j < m; ++j) {
        const double amp = std::abs(cand(j));
        if (amp > sc.a_max) cand(j) *= sc.a_max / amp;
      }
      const double obj_new = inner_objective(coeffs, cand);
      rec.solver_residual = sol.max_residual;
      rec.objective_after = obj_new;
      if (obj_new >
          rec.objective_before + 1e-6 * (1.0 + std::abs(rec.objective_before))) {
        rec.status = "non-descent-exit";
        rec.objective_after = rec.objective_before;
        res.trace.push_back(rec);
        exit_loop = true;
        break;
      }
      rec.status = "ok";
      res.trace.push_back(rec);
      phi.phi = cand;
      psi = update_psi(phi, ch, sc);
      stepped = true;

      res.iterations = it + 1;
      if (!std::isnan(prev_obj) &&
          std::abs(prev_obj - obj_new) <
              opts.tol * std::max(1e-300, std::abs(prev_obj))) {
        res.converged = true;
        exit_loop = true;
      }
      prev_obj = obj_new;
    }
    if (exit_loop || !stepped) break;
  }

  res.phi = phi;
  res.psi = psi;
  res.objective = inner_objective(
      compute_phi_coefficients(em, w, psi, ch, opts.kron_cap), phi.phi);
  return res;
}

}  // namespace arisac::reflector
