#include "arisac/initializer.hpp"

#include <cmath>

namespace arisac::initializer {

namespace {

double objective(const InitProblem& p, const CVec& psi) {
  return -(psi.adjoint() * p.m_mat * psi).value().real() -
         (psi.adjoint() * p.m_vec).value().real();
}

// 2 d f / d psi-bar for f = -psi^H M psi - Re{psi^H m}.
CVec euclidean_gradient(const InitProblem& p, const CVec& psi) {
  return -2.0 * (p.m_mat * psi) - p.m_vec;
}

// Zeroes the radial component of v at each element of the unit circle.
CVec project_tangent(const CVec& v, const CVec& psi) {
  CVec out(v.size());
  for (int i = 0; i < v.size(); ++i)
    out(i) = v(i) - (v(i) * std::conj(psi(i))).real() * psi(i);
  return out;
}

// Per-element normalization back onto the circles.
CVec retract(const CVec& x) {
  CVec out(x.size());
  for (int i = 0; i < x.size(); ++i) {
    const double a = std::abs(x(i));
    out(i) = a > 0.0 ? x(i) / a : Complex(1.0, 0.0);
  }
  return out;
}

double inner_re(const CVec& a, const CVec& b) { return (a.adjoint() * b).value().real(); }

}  // namespace

InitProblem build_init_problem(const ChannelSet& ch) {
  const int m = static_cast<int>(ch.h_rt.size());
  InitProblem p;
  const CMat gram = ch.g.conjugate() * ch.g.transpose();  // G* G^T, M x M
  p.m_mat = ch.h_rt.conjugate().asDiagonal() * gram * ch.h_rt.asDiagonal();
  p.m_vec = CVec::Zero(m);
  for (std::size_t k = 0; k < ch.h_r.size(); ++k) {
    p.m_mat += ch.h_r[k].conjugate().asDiagonal() * gram * CMat(ch.h_r[k].asDiagonal());
    p.m_vec += 2.0 * (ch.h_r[k].conjugate().asDiagonal() * (ch.g.conjugate() * ch.h_d[k]));
  }
  p.m_mat = 0.5 * (p.m_mat + p.m_mat.adjoint()).eval();
  return p;
}

CVec riemannian_gradient(const InitProblem& p, const CVec& psi) {
  return project_tangent(euclidean_gradient(p, psi), psi);
}

RcgResult rcg_solve(const InitProblem& p, int max_iter, double tol) {
  const int m = static_cast<int>(p.m_vec.size());
  RcgResult res;
  CVec psi = CVec::Ones(m);
  double f = objective(p, psi);
  res.psi = psi;
  res.objective = f;
  res.objectives.push_back(f);

  CVec grad = riemannian_gradient(p, psi);
  CVec dir = -grad;
  bool steepest = true;
  const double grad_scale = 1.0 + p.m_mat.norm() + p.m_vec.norm();
  for (int it = 0; it < max_iter; ++it) {
    const double gnorm2 = grad.squaredNorm();
    if (gnorm2 <= 1e-12 * grad_scale * grad_scale) {
      res.converged = true;
      break;
    }
    double slope = inner_re(grad, dir);
    if (slope >= 0.0) {  // conjugacy lost a descent direction: restart
      dir = -grad;
      steepest = true;
      slope = -gnorm2;
    }

    // Armijo backtracking along the retracted ray.
    double alpha = 1.0;
    CVec cand = retract(psi + alpha * dir);
    double f_new = objective(p, cand);
    int halvings = 0;
    while (f_new > f + 1e-4 * alpha * slope && halvings < 60) {
      alpha *= 0.5;
      ++halvings;
      cand = retract(psi + alpha * dir);
      f_new = objective(p, cand);
    }
    if (f_new >= f) {  // no progress at numerical precision
      if (steepest) {
        res.converged = true;
        break;
      }
      dir = -grad;  // retry the stalled step along steepest descent
      steepest = true;
      continue;
    }

    const CVec grad_new = riemannian_gradient(p, cand);
    // Polak-Ribiere+ with the previous gradient transported (projected) to
    // the new tangent space.
    const CVec grad_old_t = project_tangent(grad, cand);
    const double beta =
        std::max(0.0, inner_re(grad_new, grad_new - grad_old_t) / gnorm2);
    dir = -grad_new + beta * project_tangent(dir, cand);
    steepest = beta == 0.0;
    psi = cand;
    grad = grad_new;
    const double prev = f;
    f = f_new;
    res.objectives.push_back(f);
    ++res.iterations;
    if (f < res.objective) {
      res.objective = f;
      res.psi = psi;
    }
    // Converge on a tiny relative step only once the projected gradient has
    // also shrunk; otherwise keep iterating (small steps can just mean a
    // cautious line search, not stationarity).
    if (std::abs(prev - f) < tol * std::abs(prev) &&
        grad.norm() <= 1e-6 * grad_scale) {
      res.converged = true;
      break;
    }
  }
  return res;
}

ReflectVector initial_phi(const CVec& psi, double a_max) {
  return ReflectVector{a_max * psi};
}

}  // namespace arisac::initializer
