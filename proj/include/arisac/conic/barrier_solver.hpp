#pragma once

#include "arisac/conic/program.hpp"

namespace arisac::conic {

// Default backend: dense log-barrier path-following solver for programs
// over nonneg / second-order / Hermitian-PSD cones with linear equalities
// (eliminated up front).  Intended for the desk-scale problems this
// project produces; not a general-purpose solver.
class BarrierSolver : public SolverBackend {
 public:
  struct Options {
    double mu = 20.0;              // barrier parameter growth per centering
    int max_newton_iters = 80;     // per centering step
    double newton_tol = 1e-10;     // decrement^2 / 2 threshold
    double box_radius = 1e5;       // bounding box in scaled coordinates
    double infeas_threshold = 1e-8;  // phase-1 margin deciding infeasibility
  };

  BarrierSolver() = default;
  explicit BarrierSolver(Options opts) : opts_(opts) {}

  ConicSolution solve(const ConicProgram& p, double tol) override;
  std::string name() const override { return "barrier"; }

 private:
  Options opts_;
};

}  // namespace arisac::conic
