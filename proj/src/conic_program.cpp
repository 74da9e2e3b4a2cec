#include "arisac/conic/program.hpp"

#include <Eigen/Eigenvalues>
#include <sstream>
#include <stdexcept>

namespace arisac::conic {

CMat HermAffine::eval(const RVec& x) const {
  CMat m(n, n);
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i <= j; ++i) {
      const int p = pair_index(i, j);
      const Complex v(re[p].eval(x), i == j ? 0.0 : im[p].eval(x));
      m(i, j) = v;
      m(j, i) = std::conj(v);
    }
  }
  return m;
}

VarRef ConicProgram::add_real(const std::string& name, int dim) {
  if (frozen_) throw std::logic_error("conic: cannot add variables after building expressions");
  VarRef v{dof_, dim, 0};
  vars_[name] = v;
  var_order_.push_back(name);
  dof_ += dim;
  return v;
}

VarRef ConicProgram::add_complex(const std::string& name, int dim) {
  if (frozen_) throw std::logic_error("conic: cannot add variables after building expressions");
  VarRef v{dof_, 2 * dim, 0};
  vars_[name] = v;
  var_order_.push_back(name);
  dof_ += 2 * dim;
  return v;
}

VarRef ConicProgram::add_hermitian(const std::string& name, int n) {
  if (frozen_) throw std::logic_error("conic: cannot add variables after building expressions");
  VarRef v{dof_, n * n, n};
  vars_[name] = v;
  var_order_.push_back(name);
  dof_ += n * n;
  return v;
}

namespace {

// Hermitian variable dof layout: upper triangle column-major; diagonal
// entries take 1 slot, off-diagonal (i<j) take 2 (Re, Im).
int herm_dof_offset(int n, int i, int j) {
  // Slots used by columns before j: column c has c off-diag pairs + 1 diag.
  int off = 0;
  for (int c = 0; c < j; ++c) off += 2 * c + 1;
  return off + 2 * i;  // i < j: pair start; i == j: after all pairs of column j
}

}  // namespace

LinTerm ConicProgram::constant(double c) const {
  freeze();
  return LinTerm(dof_, c);
}

LinTerm ConicProgram::scalar(const VarRef& v, int i) const {
  freeze();
  LinTerm t(dof_);
  t.a(v.offset + i) = 1.0;
  return t;
}

LinTerm ConicProgram::cplx_inner_re(const VarRef& z, const CVec& c) const {
  freeze();
  const int d = z.dim / 2;
  LinTerm t(dof_);
  for (int i = 0; i < d; ++i) {
    // Re{c^H z} = sum Re(c_i) Re(z_i) + Im(c_i) Im(z_i)
    t.a(z.offset + i) = c(i).real();
    t.a(z.offset + d + i) = c(i).imag();
  }
  return t;
}

LinTerm ConicProgram::cplx_inner_im(const VarRef& z, const CVec& c) const {
  freeze();
  const int d = z.dim / 2;
  LinTerm t(dof_);
  for (int i = 0; i < d; ++i) {
    // Im{c^H z} = sum Re(c_i) Im(z_i) - Im(c_i) Re(z_i)
    t.a(z.offset + i) = -c(i).imag();
    t.a(z.offset + d + i) = c(i).real();
  }
  return t;
}

LinTerm ConicProgram::tr_herm(const VarRef& x, const CMat& m) const {
  freeze();
  const int n = x.herm_n;
  LinTerm t(dof_);
  for (int j = 0; j < n; ++j) {
    t.a(x.offset + herm_dof_offset(n, j, j)) += m(j, j).real();
    for (int i = 0; i < j; ++i) {
      // Tr{M X} picks up 2 Re{conj(M_ij) X_ij} from each off-diagonal pair.
      const int o = x.offset + herm_dof_offset(n, i, j);
      t.a(o) += 2.0 * m(i, j).real();
      t.a(o + 1) += 2.0 * m(i, j).imag();
    }
  }
  return t;
}

HermAffine ConicProgram::herm_zero(int n) const {
  freeze();
  HermAffine h;
  h.n = n;
  h.re.assign(n * (n + 1) / 2, LinTerm(dof_));
  h.im.assign(n * (n + 1) / 2, LinTerm(dof_));
  return h;
}

void ConicProgram::herm_axpy(HermAffine& acc, const VarRef& x, double coeff) const {
  const int n = x.herm_n;
  if (n != acc.n) throw std::invalid_argument("herm_axpy: dimension mismatch");
  for (int j = 0; j < n; ++j) {
    acc.re[HermAffine::pair_index(j, j)].a(x.offset + herm_dof_offset(n, j, j)) += coeff;
    for (int i = 0; i < j; ++i) {
      const int p = HermAffine::pair_index(i, j);
      const int o = x.offset + herm_dof_offset(n, i, j);
      acc.re[p].a(o) += coeff;
      acc.im[p].a(o + 1) += coeff;
    }
  }
}

HermAffine ConicProgram::herm_expr(const VarRef& x, double coeff) const {
  HermAffine h = herm_zero(x.herm_n);
  herm_axpy(h, x, coeff);
  return h;
}

void ConicProgram::minimize(const LinTerm& obj) {
  check_dim(obj);
  objective_ = obj;
  obj_sign_ = 1.0;
}

void ConicProgram::maximize(const LinTerm& obj) {
  check_dim(obj);
  objective_ = obj;
  objective_ *= -1.0;
  obj_sign_ = -1.0;
}

void ConicProgram::check_dim(const LinTerm& t) const {
  if (t.a.size() != dof_)
    throw std::invalid_argument("conic: expression built for a different program");
}

void ConicProgram::add_eq(const LinTerm& expr, const std::string& label) {
  check_dim(expr);
  constraints_.push_back({ConstraintKind::Equality, label, {expr}, {}});
}

void ConicProgram::add_nonneg(const LinTerm& expr, const std::string& label) {
  check_dim(expr);
  constraints_.push_back({ConstraintKind::Nonneg, label, {expr}, {}});
}

void ConicProgram::add_soc(const LinTerm& t, const std::vector<LinTerm>& u,
                           const std::string& label) {
  check_dim(t);
  std::vector<LinTerm> rows{t};
  for (const auto& r : u) {
    check_dim(r);
    rows.push_back(r);
  }
  constraints_.push_back({ConstraintKind::Soc, label, std::move(rows), {}});
}

void ConicProgram::add_rsoc(const LinTerm& p, const LinTerm& q, const std::vector<LinTerm>& u,
                            const std::string& label) {
  check_dim(p);
  check_dim(q);
  std::vector<LinTerm> rows{p, q};
  for (const auto& r : u) {
    check_dim(r);
    rows.push_back(r);
  }
  constraints_.push_back({ConstraintKind::RotatedSoc, label, std::move(rows), {}});
}

void ConicProgram::add_psd(const HermAffine& expr, const std::string& label) {
  for (const auto& r : expr.re) check_dim(r);
  for (const auto& r : expr.im) check_dim(r);
  Constraint c{ConstraintKind::PsdHermitian, label, {}, expr};
  constraints_.push_back(std::move(c));
}

namespace {

double data_scale(const Constraint& c) {
  double s = 0.0;
  for (const auto& r : c.rows) s = std::max(s, std::max(r.a.lpNorm<Eigen::Infinity>(), std::abs(r.b)));
  for (const auto& r : c.psd.re) s = std::max(s, std::max(r.a.lpNorm<Eigen::Infinity>(), std::abs(r.b)));
  for (const auto& r : c.psd.im) s = std::max(s, std::max(r.a.lpNorm<Eigen::Infinity>(), std::abs(r.b)));
  return s;
}

}  // namespace

double ConicProgram::constraint_violation(const Constraint& c, const RVec& x) const {
  const double scale = 1.0 + data_scale(c) * (1.0 + x.lpNorm<Eigen::Infinity>());
  switch (c.kind) {
    case ConstraintKind::Equality:
      return std::abs(c.rows[0].eval(x)) / scale;
    case ConstraintKind::Nonneg:
      return std::max(0.0, -c.rows[0].eval(x)) / scale;
    case ConstraintKind::Soc: {
      double un = 0.0;
      for (std::size_t i = 1; i < c.rows.size(); ++i) un += std::pow(c.rows[i].eval(x), 2);
      return std::max(0.0, std::sqrt(un) - c.rows[0].eval(x)) / scale;
    }
    case ConstraintKind::RotatedSoc: {
      const double p = c.rows[0].eval(x);
      const double q = c.rows[1].eval(x);
      double un = 0.0;
      for (std::size_t i = 2; i < c.rows.size(); ++i) un += std::pow(c.rows[i].eval(x), 2);
      double v = std::max(0.0, std::max(-p, -q));
      // pq >= ||u||^2 violation measured on the SOC-equivalent form.
      v = std::max(v, std::hypot(2.0 * std::sqrt(un), p - q) - (p + q));
      return v / scale;
    }
    case ConstraintKind::PsdHermitian: {
      const CMat m = c.psd.eval(x);
      Eigen::SelfAdjointEigenSolver<CMat> es(m, Eigen::EigenvaluesOnly);
      return std::max(0.0, -es.eigenvalues().minCoeff()) / scale;
    }
  }
  return 0.0;
}

double ConicProgram::max_violation(const RVec& x) const {
  double v = 0.0;
  for (const auto& c : constraints_) v = std::max(v, constraint_violation(c, x));
  return v;
}

ConicSolution ConicProgram::solve(SolverBackend& backend, double tol) const {
  ConicSolution sol = backend.solve(*this, tol);
  sol.solver_tolerance = tol;
  if (sol.status == SolveStatus::Optimal) {
    sol.max_residual = max_violation(sol.x);
    if (sol.max_residual > 10.0 * tol) {
      sol.status = SolveStatus::NumericalFailure;
      sol.message = "residual re-verification failed (violation " +
                    std::to_string(sol.max_residual) + ")";
    }
  }
  return sol;
}

double ConicProgram::value_real(const ConicSolution& s, const VarRef& v, int i) const {
  return s.x(v.offset + i);
}

CVec ConicProgram::value_complex(const ConicSolution& s, const VarRef& v) const {
  const int d = v.dim / 2;
  CVec z(d);
  for (int i = 0; i < d; ++i) z(i) = Complex(s.x(v.offset + i), s.x(v.offset + d + i));
  return z;
}

CMat ConicProgram::value_hermitian(const ConicSolution& s, const VarRef& v) const {
  const int n = v.herm_n;
  CMat m(n, n);
  for (int j = 0; j < n; ++j) {
    m(j, j) = s.x(v.offset + herm_dof_offset(n, j, j));
    for (int i = 0; i < j; ++i) {
      const int o = v.offset + herm_dof_offset(n, i, j);
      m(i, j) = Complex(s.x(o), s.x(o + 1));
      m(j, i) = std::conj(m(i, j));
    }
  }
  return m;
}

std::string ConicProgram::dump() const {
  std::ostringstream os;
  os << "conic program: dof=" << dof_ << " constraints=" << constraints_.size() << "\n";
  for (const auto& name : var_order_) {
    const auto& v = vars_.at(name);
    os << "var " << name << " offset=" << v.offset << " dim=" << v.dim;
    if (v.herm_n) os << " hermitian n=" << v.herm_n;
    os << "\n";
  }
  auto dump_term = [&os](const LinTerm& t) {
    for (int i = 0; i < t.a.size(); ++i)
      if (t.a(i) != 0.0) os << " " << i << ":" << t.a(i);
    if (t.b != 0.0) os << " const:" << t.b;
    os << "\n";
  };
  os << "objective (min):";
  dump_term(objective_);
  for (const auto& c : constraints_) {
    const char* kinds[] = {"eq", "nonneg", "soc", "rsoc", "psd"};
    os << kinds[static_cast<int>(c.kind)] << " " << c.label << "\n";
    for (const auto& r : c.rows) {
      os << "  row:";
      dump_term(r);
    }
    if (c.kind == ConstraintKind::PsdHermitian) {
      os << "  herm n=" << c.psd.n << "\n";
    }
  }
  return os.str();
}

RMat hermitian_to_real_embedding(const CMat& x) {
  if ((x - x.adjoint()).norm() > 1e-10 * (1.0 + x.norm()))
    throw std::invalid_argument("hermitian_to_real_embedding: input not Hermitian");
  const int n = static_cast<int>(x.rows());
  RMat e(2 * n, 2 * n);
  e.topLeftCorner(n, n) = x.real();
  e.topRightCorner(n, n) = -x.imag();
  e.bottomLeftCorner(n, n) = x.imag();
  e.bottomRightCorner(n, n) = x.real();
  return e;
}

}  // namespace arisac::conic
