#include "arisac/conic/barrier_solver.hpp"

#include <Eigen/Cholesky>
#include <Eigen/LU>
#include <functional>
#include <limits>

namespace arisac::conic {

namespace {

// One second-order-cone block: s = G x + h, s0 > ||s1..||.
struct SocBlock {
  RMat g;
  RVec h;
};

// Nonneg rows, all independent: s_i = g_i^T x + h_i > 0.
struct NonnegBlock {
  RMat g;
  RVec h;
};

// Hermitian PSD block: S(x) = H0 + sum_j x_cols[j] * basis[j].
struct PsdBlock {
  int n = 0;
  CMat h0;
  std::vector<int> cols;
  std::vector<CMat> basis;
};

struct BarrierProblem {
  int nv = 0;
  RVec c;
  NonnegBlock nonneg;  // may have zero rows
  std::vector<SocBlock> socs;
  std::vector<PsdBlock> psds;

  double nu() const {
    double v = static_cast<double>(nonneg.h.size());
    v += 2.0 * static_cast<double>(socs.size());
    for (const auto& p : psds) v += static_cast<double>(p.n);
    return v;
  }
};

struct ConeState {
  RVec nonneg_s;
  std::vector<RVec> soc_s;
  std::vector<Eigen::LLT<CMat>> psd_llt;
  std::vector<CMat> psd_s;
  bool interior = false;
};

ConeState evaluate_cones(const BarrierProblem& bp, const RVec& x) {
  ConeState st;
  st.interior = true;
  if (bp.nonneg.h.size() > 0) {
    st.nonneg_s = bp.nonneg.g * x + bp.nonneg.h;
    if ((st.nonneg_s.array() <= 0.0).any()) st.interior = false;
  }
  if (!st.interior) return st;
  st.soc_s.reserve(bp.socs.size());
  for (const auto& b : bp.socs) {
    RVec s = b.g * x + b.h;
    const double t = s(0);
    if (t <= 0.0 || t * t - s.tail(s.size() - 1).squaredNorm() <= 0.0) {
      st.interior = false;
      return st;
    }
    st.soc_s.push_back(std::move(s));
  }
  st.psd_s.reserve(bp.psds.size());
  st.psd_llt.reserve(bp.psds.size());
  for (const auto& b : bp.psds) {
    CMat s = b.h0;
    for (std::size_t j = 0; j < b.cols.size(); ++j) s += x(b.cols[j]) * b.basis[j];
    Eigen::LLT<CMat> llt(s);
    if (llt.info() != Eigen::Success) {
      st.interior = false;
      return st;
    }
    st.psd_s.push_back(std::move(s));
    st.psd_llt.push_back(std::move(llt));
  }
  return st;
}

double barrier_value(const BarrierProblem& bp, const ConeState& st) {
  double v = 0.0;
  for (int i = 0; i < st.nonneg_s.size(); ++i) v -= std::log(st.nonneg_s(i));
  for (const auto& s : st.soc_s)
    v -= std::log(s(0) * s(0) - s.tail(s.size() - 1).squaredNorm());
  for (const auto& llt : st.psd_llt) {
    const auto& l = llt.matrixLLT();
    for (int i = 0; i < l.rows(); ++i) v -= 2.0 * std::log(l(i, i).real());
  }
  return v;
}

void add_barrier_grad_hess(const BarrierProblem& bp, const RVec& x, const ConeState& st,
                           RVec& grad, RMat& hess) {
  // Nonneg rows: -log s, grad -g/s, hess g g^T / s^2.
  if (st.nonneg_s.size() > 0) {
    const RVec inv_s = st.nonneg_s.cwiseInverse();
    grad.noalias() -= bp.nonneg.g.transpose() * inv_s;
    // G^T diag(1/s^2) G
    const RMat gs = inv_s.asDiagonal() * bp.nonneg.g;
    hess.noalias() += gs.transpose() * gs;
  }
  // SOC blocks: f = -log(t^2 - ||u||^2).
  for (std::size_t bi = 0; bi < bp.socs.size(); ++bi) {
    const auto& b = bp.socs[bi];
    const RVec& s = st.soc_s[bi];
    const double r = s(0) * s(0) - s.tail(s.size() - 1).squaredNorm();
    RVec dr(s.size());
    dr(0) = 2.0 * s(0);
    dr.tail(s.size() - 1) = -2.0 * s.tail(s.size() - 1);
    // grad_s = -dr/r ; hess_s = dr dr^T / r^2 - D2r / r, D2r = diag(2,-2I)
    grad.noalias() += b.g.transpose() * (-dr / r);
    const RVec gdr = b.g.transpose() * dr;
    hess.noalias() += gdr * gdr.transpose() / (r * r);
    RVec d2(s.size());
    d2(0) = -2.0 / r;
    d2.tail(s.size() - 1).setConstant(2.0 / r);
    hess.noalias() += b.g.transpose() * d2.asDiagonal() * b.g;
  }
  // PSD blocks: f = -log det S.
  for (std::size_t bi = 0; bi < bp.psds.size(); ++bi) {
    const auto& b = bp.psds[bi];
    const auto& llt = st.psd_llt[bi];
    const int nc = static_cast<int>(b.cols.size());
    const CMat sinv = llt.solve(CMat::Identity(b.n, b.n));
    std::vector<CMat> bmats(nc);
    for (int j = 0; j < nc; ++j) {
      grad(b.cols[j]) -= (sinv.cwiseProduct(b.basis[j].conjugate())).sum().real();
      bmats[j] = sinv * b.basis[j] * sinv;
    }
    for (int j = 0; j < nc; ++j) {
      for (int k = j; k < nc; ++k) {
        const double v = (bmats[j].cwiseProduct(b.basis[k].conjugate())).sum().real();
        hess(b.cols[j], b.cols[k]) += v;
        if (k != j) hess(b.cols[k], b.cols[j]) += v;
      }
    }
  }
}

// Newton centering for f_t(x) = t c^T x + barrier(x).  Returns false on a
// line-search collapse.
bool center(const BarrierProblem& bp, double t, RVec& x, int max_iters, double newton_tol) {
  for (int it = 0; it < max_iters; ++it) {
    ConeState st = evaluate_cones(bp, x);
    if (!st.interior) return false;  // should not happen from an interior start
    RVec grad = t * bp.c;
    RMat hess = RMat::Zero(bp.nv, bp.nv);
    add_barrier_grad_hess(bp, x, st, grad, hess);
    const double ridge = 1e-12 * std::max(1.0, hess.diagonal().cwiseAbs().maxCoeff());
    hess.diagonal().array() += ridge;
    Eigen::LDLT<RMat> ldlt(hess);
    RVec dx = -ldlt.solve(grad);
    if (!dx.allFinite()) return false;
    const double lambda2 = -grad.dot(dx);
    if (lambda2 / 2.0 < newton_tol) return true;

    double alpha = 1.0;
    ConeState st_new = evaluate_cones(bp, x + alpha * dx);
    while (!st_new.interior) {
      alpha *= 0.6;
      if (alpha < 1e-14) return false;
      st_new = evaluate_cones(bp, x + alpha * dx);
    }
    const double f0 = t * bp.c.dot(x) + barrier_value(bp, st);
    double f_new = t * bp.c.dot(x + alpha * dx) + barrier_value(bp, st_new);
    while (f_new > f0 + 0.01 * alpha * grad.dot(dx)) {
      alpha *= 0.5;
      if (alpha < 1e-14) return true;  // stalled at numerical precision
      st_new = evaluate_cones(bp, x + alpha * dx);
      if (!st_new.interior) continue;
      f_new = t * bp.c.dot(x + alpha * dx) + barrier_value(bp, st_new);
    }
    x += alpha * dx;
  }
  return true;
}

// Path following until nu/t <= gap_tol.  early_stop (optional) is checked
// after each centering.
bool follow_path(const BarrierProblem& bp, RVec& x, double gap_tol, double mu, int max_newton,
                 double newton_tol, int* iters,
                 const std::function<bool(const RVec&)>& early_stop = nullptr) {
  const double nu = std::max(bp.nu(), 1.0);
  double t = 1.0;
  for (int outer = 0; outer < 80; ++outer) {
    if (!center(bp, t, x, max_newton, newton_tol)) return false;
    if (iters) ++*iters;
    if (early_stop && early_stop(x)) return true;
    if (nu / t <= gap_tol) return true;
    t *= mu;
  }
  return false;
}

}  // namespace

ConicSolution BarrierSolver::solve(const ConicProgram& p, double tol) {
  ConicSolution sol;
  sol.solver_tolerance = tol;
  const int dof = p.dof();

  // ---- Gather constraints in x space ----
  std::vector<RVec> eq_rows;
  std::vector<double> eq_consts;
  std::vector<RVec> nn_rows;
  std::vector<double> nn_consts;
  struct RawSoc {
    std::vector<RVec> rows;
    std::vector<double> consts;
  };
  std::vector<RawSoc> raw_socs;
  struct RawPsd {
    int n;
    const HermAffine* expr;
  };
  std::vector<RawPsd> raw_psds;

  for (const auto& con : p.constraints()) {
    switch (con.kind) {
      case ConstraintKind::Equality:
        eq_rows.push_back(con.rows[0].a);
        eq_consts.push_back(con.rows[0].b);
        break;
      case ConstraintKind::Nonneg:
        nn_rows.push_back(con.rows[0].a);
        nn_consts.push_back(con.rows[0].b);
        break;
      case ConstraintKind::Soc: {
        RawSoc s;
        for (const auto& r : con.rows) {
          s.rows.push_back(r.a);
          s.consts.push_back(r.b);
        }
        raw_socs.push_back(std::move(s));
        break;
      }
      case ConstraintKind::RotatedSoc: {
        // p q >= ||u||^2, p,q >= 0  <=>  ||(p-q, 2u)|| <= p+q.
        RawSoc s;
        const auto& rows = con.rows;
        s.rows.push_back(rows[0].a + rows[1].a);
        s.consts.push_back(rows[0].b + rows[1].b);
        s.rows.push_back(rows[0].a - rows[1].a);
        s.consts.push_back(rows[0].b - rows[1].b);
        for (std::size_t i = 2; i < rows.size(); ++i) {
          s.rows.push_back(2.0 * rows[i].a);
          s.consts.push_back(2.0 * rows[i].b);
        }
        raw_socs.push_back(std::move(s));
        break;
      }
      case ConstraintKind::PsdHermitian:
        raw_psds.push_back({con.psd.n, &con.psd});
        break;
    }
  }

  // ---- Equality elimination: x = x0 + N y ----
  RVec x0 = RVec::Zero(dof);
  RMat nmat = RMat::Identity(dof, dof);
  if (!eq_rows.empty()) {
    RMat a(eq_rows.size(), dof);
    RVec b(eq_rows.size());
    for (std::size_t i = 0; i < eq_rows.size(); ++i) {
      a.row(i) = eq_rows[i];
      b(i) = -eq_consts[i];  // rows are a^T x + b = 0
    }
    x0 = a.completeOrthogonalDecomposition().solve(b);
    if ((a * x0 - b).lpNorm<Eigen::Infinity>() >
        1e-9 * (1.0 + b.lpNorm<Eigen::Infinity>())) {
      sol.status = SolveStatus::Infeasible;
      sol.message = "inconsistent equality constraints";
      return sol;
    }
    Eigen::FullPivLU<RMat> lu(a);
    nmat = lu.kernel();
    if (nmat.cols() == 0) {
      // Fully determined by equalities: nothing left to optimize.
      sol.x = x0;
      sol.status = SolveStatus::Optimal;
      const double min_val = p.objective().eval(x0);
      sol.objective_value = p.objective_sign() < 0 ? -min_val : min_val;
      return sol;
    }
  }
  const int nv = static_cast<int>(nmat.cols());

  // ---- Build y-space problem ----
  BarrierProblem bp;
  bp.nv = nv;
  RVec c_y = nmat.transpose() * p.objective().a;
  const double obj_const = p.objective().b + p.objective().a.dot(x0);

  if (!nn_rows.empty()) {
    bp.nonneg.g.resize(nn_rows.size(), nv);
    bp.nonneg.h.resize(nn_rows.size());
    for (std::size_t i = 0; i < nn_rows.size(); ++i) {
      bp.nonneg.g.row(i) = nn_rows[i].transpose() * nmat;
      bp.nonneg.h(i) = nn_consts[i] + nn_rows[i].dot(x0);
    }
  } else {
    bp.nonneg.g.resize(0, nv);
    bp.nonneg.h.resize(0);
  }
  for (const auto& rs : raw_socs) {
    SocBlock b;
    b.g.resize(rs.rows.size(), nv);
    b.h.resize(rs.rows.size());
    for (std::size_t i = 0; i < rs.rows.size(); ++i) {
      b.g.row(i) = rs.rows[i].transpose() * nmat;
      b.h(i) = rs.consts[i] + rs.rows[i].dot(x0);
    }
    bp.socs.push_back(std::move(b));
  }
  for (const auto& rp : raw_psds) {
    PsdBlock b;
    b.n = rp.n;
    // Assemble basis matrices in x space, then map through N.
    std::vector<CMat> basis_x(dof, CMat());
    CMat h0x = CMat::Zero(rp.n, rp.n);
    for (int j = 0; j < rp.n; ++j) {
      for (int i = 0; i <= j; ++i) {
        const int pr = HermAffine::pair_index(i, j);
        const auto& re = rp.expr->re[pr];
        const auto& im = rp.expr->im[pr];
        const Complex hc(re.b, i == j ? 0.0 : im.b);
        h0x(i, j) += hc;
        if (i != j) h0x(j, i) += std::conj(hc);
        else h0x(j, j) = h0x(j, j).real();
        for (int v = 0; v < dof; ++v) {
          const Complex cv(re.a(v), i == j ? 0.0 : im.a(v));
          if (cv == Complex(0.0, 0.0)) continue;
          if (basis_x[v].size() == 0) basis_x[v] = CMat::Zero(rp.n, rp.n);
          basis_x[v](i, j) += cv;
          if (i != j) basis_x[v](j, i) += std::conj(cv);
        }
      }
    }
    // Constant part picks up the x0 shift.
    CMat h0 = h0x;
    for (int v = 0; v < dof; ++v)
      if (basis_x[v].size() != 0) h0 += x0(v) * basis_x[v];
    // y-space basis: A'_k = sum_v N(v,k) A_v.
    for (int k = 0; k < nv; ++k) {
      CMat ak = CMat::Zero(rp.n, rp.n);
      bool nz = false;
      for (int v = 0; v < dof; ++v) {
        const double w = nmat(v, k);
        if (w != 0.0 && basis_x[v].size() != 0) {
          ak += w * basis_x[v];
          nz = true;
        }
      }
      if (nz && ak.cwiseAbs().maxCoeff() > 0.0) {
        b.cols.push_back(k);
        b.basis.push_back(std::move(ak));
      }
    }
    b.h0 = std::move(h0);
    bp.psds.push_back(std::move(b));
  }

  // ---- Scaling: per-block row scaling + column equilibration ----
  RVec col_scale = RVec::Ones(nv);
  auto col_max_update = [&](RVec& cm) {
    for (int i = 0; i < bp.nonneg.g.rows(); ++i)
      cm = cm.cwiseMax(bp.nonneg.g.row(i).cwiseAbs().transpose());
    for (const auto& b : bp.socs)
      for (int i = 0; i < b.g.rows(); ++i)
        cm = cm.cwiseMax(b.g.row(i).cwiseAbs().transpose());
    for (const auto& b : bp.psds)
      for (std::size_t j = 0; j < b.cols.size(); ++j)
        cm(b.cols[j]) = std::max(cm(b.cols[j]), b.basis[j].cwiseAbs().maxCoeff());
  };
  for (int pass = 0; pass < 3; ++pass) {
    // Row/block scaling (positive uniform scaling keeps cones invariant).
    for (int i = 0; i < bp.nonneg.g.rows(); ++i) {
      const double m = std::max(bp.nonneg.g.row(i).cwiseAbs().maxCoeff(),
                                std::abs(bp.nonneg.h(i)));
      if (m > 0.0) {
        bp.nonneg.g.row(i) /= m;
        bp.nonneg.h(i) /= m;
      }
    }
    for (auto& b : bp.socs) {
      const double m = std::max(b.g.cwiseAbs().maxCoeff(), b.h.cwiseAbs().maxCoeff());
      if (m > 0.0) {
        b.g /= m;
        b.h /= m;
      }
    }
    for (auto& b : bp.psds) {
      double m = b.h0.cwiseAbs().maxCoeff();
      for (const auto& a : b.basis) m = std::max(m, a.cwiseAbs().maxCoeff());
      if (m > 0.0) {
        b.h0 /= m;
        for (auto& a : b.basis) a /= m;
      }
    }
    // Column scaling: y = D y~.
    RVec cm = RVec::Zero(nv);
    col_max_update(cm);
    for (int j = 0; j < nv; ++j) {
      const double d = cm(j) > 0.0 ? 1.0 / std::sqrt(cm(j)) : 1.0;
      col_scale(j) *= d;
      bp.nonneg.g.col(j) *= d;
      for (auto& b : bp.socs) b.g.col(j) *= d;
      for (auto& b : bp.psds)
        for (std::size_t k = 0; k < b.cols.size(); ++k)
          if (b.cols[k] == j) b.basis[k] *= d;
    }
  }
  RVec c_scaled = c_y.cwiseProduct(col_scale);
  double obj_norm = c_scaled.lpNorm<Eigen::Infinity>();
  if (obj_norm <= 0.0) obj_norm = 1.0;
  c_scaled /= obj_norm;

  // ---- Bounding box in scaled coordinates (keeps sublevel sets compact) ----
  const double box_r = opts_.box_radius;
  {
    const int old_rows = static_cast<int>(bp.nonneg.g.rows());
    RMat g(old_rows + 2 * nv, nv);
    RVec h(old_rows + 2 * nv);
    g.topRows(old_rows) = bp.nonneg.g;
    h.head(old_rows) = bp.nonneg.h;
    g.middleRows(old_rows, nv) = RMat::Identity(nv, nv);
    h.segment(old_rows, nv).setConstant(box_r);
    g.bottomRows(nv) = -RMat::Identity(nv, nv);
    h.tail(nv).setConstant(box_r);
    bp.nonneg.g = std::move(g);
    bp.nonneg.h = std::move(h);
  }
  bp.c = c_scaled;

  auto finish = [&](const RVec& y_scaled, SolveStatus status, const std::string& msg) {
    sol.status = status;
    sol.message = msg;
    if (status == SolveStatus::Optimal) {
      const RVec y = y_scaled.cwiseProduct(col_scale);
      sol.x = x0 + nmat * y;
      const double min_val = p.objective().a.dot(sol.x) + p.objective().b;
      sol.objective_value = p.objective_sign() < 0 ? -min_val : min_val;
      if (y_scaled.lpNorm<Eigen::Infinity>() > 0.5 * box_r) {
        sol.status = SolveStatus::Unbounded;
        sol.message = "solution escaped to the bounding box";
      }
    }
    return sol;
  };

  // ---- Phase 1: find a strictly interior point ----
  // Blocks can have wildly different natural slack scales even after data
  // scaling (a tiny trace block next to an O(1) power row), so each block is
  // shifted by u times its own violation-derived weight instead of a shared
  // unit shift.  At u = 1 every block is interior; u < 0 certifies an
  // interior point of the original cones.
  RVec y = RVec::Zero(nv);
  {
    const int nn_rows = static_cast<int>(bp.nonneg.g.rows());
    RVec nn_margin(nn_rows);
    nn_margin = -bp.nonneg.h;  // -slack at y = 0
    std::vector<double> soc_margin, psd_margin;
    for (const auto& b : bp.socs)
      soc_margin.push_back(b.h.tail(b.h.size() - 1).norm() - b.h(0));
    for (const auto& b : bp.psds) {
      Eigen::SelfAdjointEigenSolver<CMat> es(b.h0, Eigen::EigenvaluesOnly);
      psd_margin.push_back(-es.eigenvalues().minCoeff());
    }
    double worst = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < nn_rows; ++i) worst = std::max(worst, nn_margin(i));
    for (double m : soc_margin) worst = std::max(worst, m);
    for (double m : psd_margin) worst = std::max(worst, m);

    if (worst > -1e-12) {
      // Weight: violated or boundary blocks get shifted in proportion to
      // their own violation (floored so exactly-boundary blocks move too);
      // strictly interior blocks are left untouched.
      auto weight = [](double margin) {
        return margin > -1e-12 ? std::max(1.1 * margin, 1e-10) : 0.0;
      };

      BarrierProblem ph;
      ph.nv = nv + 1;
      ph.c = RVec::Zero(nv + 1);
      ph.c(nv) = 1.0;
      ph.nonneg.g.resize(nn_rows + 1, nv + 1);
      ph.nonneg.h.resize(nn_rows + 1);
      ph.nonneg.g.setZero();
      ph.nonneg.g.topLeftCorner(nn_rows, nv) = bp.nonneg.g;
      for (int i = 0; i < nn_rows; ++i) ph.nonneg.g(i, nv) = weight(nn_margin(i));
      ph.nonneg.h.head(nn_rows) = bp.nonneg.h;
      // cap: u <= 2
      ph.nonneg.g.row(nn_rows).setZero();
      ph.nonneg.g(nn_rows, nv) = -1.0;
      ph.nonneg.h(nn_rows) = 2.0;
      for (std::size_t bi = 0; bi < bp.socs.size(); ++bi) {
        const auto& b = bp.socs[bi];
        SocBlock s;
        s.g.resize(b.g.rows(), nv + 1);
        s.g.setZero();
        s.g.leftCols(nv) = b.g;
        s.g(0, nv) = weight(soc_margin[bi]);
        s.h = b.h;
        ph.socs.push_back(std::move(s));
      }
      for (std::size_t bi = 0; bi < bp.psds.size(); ++bi) {
        const auto& b = bp.psds[bi];
        const double w = weight(psd_margin[bi]);
        PsdBlock s;
        s.n = b.n;
        s.h0 = b.h0;
        s.cols = b.cols;
        s.basis = b.basis;
        if (w > 0.0) {
          s.cols.push_back(nv);
          s.basis.push_back(w * CMat::Identity(b.n, b.n));
        }
        ph.psds.push_back(std::move(s));
      }
      RVec z = RVec::Zero(nv + 1);
      z(nv) = 1.0;
      int iters = 0;
      // The shift level u < 0 certifies interior-ness of the original cones,
      // but what phase 2 actually needs is just an interior point, so stop as
      // soon as the current iterate is strictly inside the unshifted cones.
      const auto original_interior = [&](const RVec& zz) {
        return zz(nv) < 0.0 && evaluate_cones(bp, zz.head(nv)).interior;
      };
      const bool ok = follow_path(
          ph, z, 1e-9, opts_.mu, opts_.max_newton_iters, opts_.newton_tol, &iters,
          [&](const RVec& zz) { return zz(nv) < -0.02 || original_interior(zz); });
      sol.iterations += iters;
      if (!original_interior(z)) {
        if (!ok) return finish(y, SolveStatus::NumericalFailure, "phase-1 breakdown");
        return finish(y, SolveStatus::Infeasible, "phase-1 margin " + std::to_string(z(nv)));
      }
      y = z.head(nv);
    }
  }

  // ---- Phase 2 ----
  int iters = 0;
  const bool ok = follow_path(bp, y, tol, opts_.mu, opts_.max_newton_iters,
                              opts_.newton_tol, &iters);
  sol.iterations += iters;
  if (!ok) return finish(y, SolveStatus::NumericalFailure, "phase-2 breakdown");
  return finish(y, SolveStatus::Optimal, "");
}

}  // namespace arisac::conic
