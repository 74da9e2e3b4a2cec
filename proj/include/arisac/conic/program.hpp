#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "arisac/types.hpp"

namespace arisac::conic {

// Handle to a declared variable; dim counts real degrees of freedom.
struct VarRef {
  int offset = 0;
  int dim = 0;
  int herm_n = 0;  // >0 for Hermitian matrix variables
};

// Affine real-valued functional a^T x + b over the program's real dof.
struct LinTerm {
  RVec a;
  double b = 0.0;

  LinTerm() = default;
  explicit LinTerm(int dof, double constant = 0.0) : a(RVec::Zero(dof)), b(constant) {}

  LinTerm& operator+=(const LinTerm& o) {
    a += o.a;
    b += o.b;
    return *this;
  }
  LinTerm& operator-=(const LinTerm& o) {
    a -= o.a;
    b -= o.b;
    return *this;
  }
  LinTerm& operator*=(double s) {
    a *= s;
    b *= s;
    return *this;
  }
  friend LinTerm operator+(LinTerm l, const LinTerm& r) { return l += r; }
  friend LinTerm operator-(LinTerm l, const LinTerm& r) { return l -= r; }
  friend LinTerm operator*(double s, LinTerm l) { return l *= s; }

  double eval(const RVec& x) const { return a.dot(x) + b; }
};

// Affine Hermitian-matrix-valued expression (upper triangle, column-major:
// pair index p = j(j+1)/2 + i for i <= j).
struct HermAffine {
  int n = 0;
  std::vector<LinTerm> re;  // n(n+1)/2 entries
  std::vector<LinTerm> im;  // n(n+1)/2 entries; diagonal entries must stay zero

  static int pair_index(int i, int j) { return j * (j + 1) / 2 + i; }
  CMat eval(const RVec& x) const;
};

enum class ConstraintKind { Equality, Nonneg, Soc, RotatedSoc, PsdHermitian };

struct Constraint {
  ConstraintKind kind;
  std::string label;
  // Equality / Nonneg: rows[0..]; Soc: rows[0]=t, rows[1..]=u;
  // RotatedSoc: rows[0]=p, rows[1]=q, rows[2..]=u.
  std::vector<LinTerm> rows;
  HermAffine psd;  // PsdHermitian only
};

enum class SolveStatus { Optimal, Infeasible, Unbounded, NumericalFailure };

struct ConicSolution {
  SolveStatus status = SolveStatus::NumericalFailure;
  RVec x;  // raw dof vector (valid for Optimal)
  double objective_value = 0.0;
  double solver_tolerance = 0.0;
  double max_residual = 0.0;  // independent re-verification result
  int iterations = 0;
  std::string message;
};

class SolverBackend;

// Solver-agnostic conic program: named variables, a real linear objective,
// and equality / nonneg / SOC / rotated-SOC / Hermitian-PSD constraints.
class ConicProgram {
 public:
  VarRef add_real(const std::string& name, int dim = 1);
  VarRef add_complex(const std::string& name, int dim);  // [Re; Im] packing
  VarRef add_hermitian(const std::string& name, int n);

  int dof() const { return dof_; }

  // ---- Affine expression builders (freeze variable creation) ----
  LinTerm constant(double c) const;
  LinTerm scalar(const VarRef& v, int i = 0) const;
  // Re{c^H z} and Im{c^H z} for a complex vector variable z.
  LinTerm cplx_inner_re(const VarRef& z, const CVec& c) const;
  LinTerm cplx_inner_im(const VarRef& z, const CVec& c) const;
  // Tr{M X} for a Hermitian variable X and Hermitian coefficient M.
  LinTerm tr_herm(const VarRef& x, const CMat& m) const;
  // X scaled by a real coefficient, as a Hermitian affine expression.
  HermAffine herm_expr(const VarRef& x, double coeff = 1.0) const;
  HermAffine herm_zero(int n) const;
  void herm_axpy(HermAffine& acc, const VarRef& x, double coeff) const;

  // ---- Objective & constraints ----
  void minimize(const LinTerm& obj);
  void maximize(const LinTerm& obj);

  void add_eq(const LinTerm& expr, const std::string& label = "");           // expr = 0
  void add_nonneg(const LinTerm& expr, const std::string& label = "");       // expr >= 0
  void add_soc(const LinTerm& t, const std::vector<LinTerm>& u,
               const std::string& label = "");                               // ||u|| <= t
  void add_rsoc(const LinTerm& p, const LinTerm& q, const std::vector<LinTerm>& u,
                const std::string& label = "");                              // pq >= ||u||^2
  void add_psd(const HermAffine& expr, const std::string& label = "");       // expr >= 0 (PSD)

  const LinTerm& objective() const { return objective_; }
  double objective_sign() const { return obj_sign_; }
  const std::vector<Constraint>& constraints() const { return constraints_; }

  // Independent residual evaluator: max violation over all constraints,
  // each normalized by (1 + |constraint data|).
  double max_violation(const RVec& x) const;
  double constraint_violation(const Constraint& c, const RVec& x) const;

  // Solves via the backend, then re-verifies residuals; optimal solutions
  // violating the residual bound are downgraded to NumericalFailure.
  ConicSolution solve(SolverBackend& backend, double tol = 1e-8) const;

  // ---- Value extraction ----
  double value_real(const ConicSolution& s, const VarRef& v, int i = 0) const;
  CVec value_complex(const ConicSolution& s, const VarRef& v) const;
  CMat value_hermitian(const ConicSolution& s, const VarRef& v) const;

  // Sparse-triplet style text dump for offline inspection.
  std::string dump() const;

 private:
  void freeze() const { frozen_ = true; }
  void check_dim(const LinTerm& t) const;

  int dof_ = 0;
  mutable bool frozen_ = false;
  std::map<std::string, VarRef> vars_;
  std::vector<std::string> var_order_;
  LinTerm objective_;
  double obj_sign_ = 1.0;  // +1 minimize, -1 stored negated for maximize
  std::vector<Constraint> constraints_;
};

// [[Re X, -Im X], [Im X, Re X]]; X PSD iff the embedding is PSD.
RMat hermitian_to_real_embedding(const CMat& x);

// Narrow backend contract so the default solver can be swapped out.
class SolverBackend {
 public:
  virtual ~SolverBackend() = default;
  virtual ConicSolution solve(const ConicProgram& p, double tol) = 0;
  virtual std::string name() const = 0;
};

}  // namespace arisac::conic
