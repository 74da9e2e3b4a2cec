#include <cmath>

#include "arisac/conic/barrier_solver.hpp"
#include "arisac/crb.hpp"
#include "arisac/precoder.hpp"
#include "arisac/reflector.hpp"
#include "arisac/rng.hpp"
#include "doctest.h"

using namespace arisac;
using namespace arisac::reflector;
using conic::SolveStatus;
using model::EchoModel;
using model::Precoder;
using model::ReflectVector;
using scenario::ChannelSet;
using scenario::Scenario;

namespace {

Scenario desk_scenario(int n = 4, int m = 4, int k = 2) {
  Scenario sc;
  sc.n_antennas = n;
  sc.m_elements = m;
  sc.k_users = k;
  sc.a_max = 4.0;
  sc.set_uniform_sinr_target(db_to_linear(10.0));
  return sc;
}

ReflectVector random_phi(int m, std::uint64_t seed, double amp = 2.0) {
  Rng rng(seed);
  auto g = rng.stream(5);
  ReflectVector phi;
  phi.phi.resize(m);
  for (int i = 0; i < m; ++i) phi.phi(i) = std::polar(amp, 2.0 * M_PI * uniform01(g));
  return phi;
}

Precoder random_precoder(int n, int cols, std::uint64_t seed, double scale = 0.1) {
  Rng rng(seed);
  auto g = rng.stream(7);
  return Precoder{scale * cgaussian_matrix(g, n, cols)};
}

struct Fixture {
  Scenario sc;
  ChannelSet ch;
  ReflectVector phi;
  Precoder w;
  EchoModel em;
  CMat psi;
  PhiCoefficients coeffs;
  SinrPhiConstants sconsts;
};

// Random-precoder fixture: exercises the algebra without a conic solve.
Fixture make_fixture(std::uint64_t seed, double amp = 2.0) {
  Fixture f;
  f.sc = desk_scenario();
  f.sc.seed = seed;
  f.ch = scenario::synthesize_channels(f.sc);
  f.phi = random_phi(f.sc.m_elements, seed, amp);
  f.w = random_precoder(f.sc.n_antennas, f.sc.k_users + f.sc.n_antennas, seed);
  f.em = model::echo_model(f.ch, f.phi, f.sc);
  f.psi = update_psi(f.phi, f.ch, f.sc);
  f.coeffs = compute_phi_coefficients(f.em, f.w, f.psi, f.ch);
  f.sconsts = compute_sinr_phi_constants(f.ch, f.w, f.sc);
  return f;
}

// Full-pipeline fixture: W from the lifted transmit design, so (w, phi) is a
// feasible pair for the reflection update.
Fixture make_solved_fixture(std::uint64_t seed, double amp) {
  Fixture f;
  f.sc = desk_scenario();
  f.sc.seed = seed;
  f.ch = scenario::synthesize_channels(f.sc);
  f.phi = random_phi(f.sc.m_elements, seed, amp);
  f.em = model::echo_model(f.ch, f.phi, f.sc);
  const auto consts = precoder::subproblem_constants(f.ch, f.phi, f.sc);
  precoder::WSdr sdr = precoder::build_w_sdr(f.em, consts, f.sc);
  conic::BarrierSolver solver;
  const auto sol = sdr.program.solve(solver, 1e-8);
  REQUIRE(sol.status == SolveStatus::Optimal);
  f.w = precoder::recover_w(sdr, sol, consts);
  f.psi = update_psi(f.phi, f.ch, f.sc);
  f.coeffs = compute_phi_coefficients(f.em, f.w, f.psi, f.ch);
  f.sconsts = compute_sinr_phi_constants(f.ch, f.w, f.sc);
  return f;
}

CVec lifted(const CVec& phi) {
  const CMat outer = phi * phi.adjoint();
  return Eigen::Map<const CVec>(outer.data(), outer.size());
}

}  // namespace

TEST_CASE("a zero precoder zeroes every beam-power operator") {
  Fixture f = make_fixture(3);
  f.w.w.setZero();
  const PhiCoefficients c = compute_phi_coefficients(f.em, f.w, f.psi, f.ch);
  CHECK(c.r1.cwiseAbs().maxCoeff() == 0.0);
  CHECK(c.f1.cwiseAbs().maxCoeff() == 0.0);   // carries the r1 factor
  CHECK(c.bigxi2.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("a single-element surface has no index-weighted terms") {
  Scenario sc = desk_scenario(4, 1, 1);
  sc.seed = 5;
  const ChannelSet ch = scenario::synthesize_channels(sc);
  const ReflectVector phi = random_phi(1, 5);
  const Precoder w = random_precoder(4, 5, 5);
  const EchoModel em = model::echo_model(ch, phi, sc);
  const CMat psi = update_psi(phi, ch, sc);
  const PhiCoefficients c = compute_phi_coefficients(em, w, psi, ch);
  CHECK(c.bigxi1.cwiseAbs().maxCoeff() == 0.0);
  CHECK(c.bigxi2.cwiseAbs().maxCoeff() == 0.0);
  CHECK(c.f.cwiseAbs().maxCoeff() == 0.0);
  const auto [t1, t2] = update_t(c, phi);
  CHECK(t1 == 0.0);
  CHECK(t2 == 0.0);
}

TEST_CASE("lifted-vector identities reproduce the quadratic forms") {
  for (std::uint64_t seed = 11; seed <= 15; ++seed) {
    const Fixture f = make_fixture(seed);
    const CVec& ph = f.phi.phi;
    const CVec v = lifted(ph);
    const int m = f.phi.m();
    RVec lv(m);
    for (int i = 0; i < m; ++i) lv(i) = i;
    const CMat l = lv.cast<Complex>().asDiagonal();

    const Complex q1 = (ph.adjoint() * f.coeffs.r1 * ph).value();
    const Complex q2 = (ph.adjoint() * f.coeffs.r2 * ph).value();
    CHECK(std::abs(f.coeffs.xi1.dot(v) - q1) < 1e-10 * (1.0 + std::abs(q1)));
    CHECK(std::abs(f.coeffs.xi2.dot(v) - q2) < 1e-10 * (1.0 + std::abs(q2)));

    // v^H Xi_1 v = |phi^H L R_2 phi|^2 (the index-weighted cross moment).
    const Complex cross2 = (ph.adjoint() * l * f.coeffs.r2 * ph).value();
    const Complex xi_quad = v.dot(f.coeffs.bigxi1 * v);
    CHECK(std::abs(xi_quad - std::norm(cross2)) <
          1e-10 * (1.0 + std::abs(xi_quad)));

    // v^H F v = sum of the two degree-4 trace terms.
    const Complex f_quad = v.dot(f.coeffs.f * v);
    const Complex direct =
        q1 * (ph.adjoint() * l * f.coeffs.r2 * l * ph).value() +
        q2 * (ph.adjoint() * l * f.coeffs.r1 * l * ph).value();
    CHECK(std::abs(f_quad - direct) < 1e-10 * (1.0 + std::abs(direct)));
  }
}

TEST_CASE("the reduced objective matches the trace-form sensing metric") {
  for (std::uint64_t seed = 21; seed <= 25; ++seed) {
    const Fixture f = make_fixture(seed);
    const double g = crb::g_trace(f.em, f.w);
    const double reduced = -f.coeffs.c0_sq * inner_objective(f.coeffs, f.phi.phi);
    CHECK(reduced == doctest::Approx(g).epsilon(1e-8));
  }
}

TEST_CASE("fractional levels satisfy their defining products and scale as phi^4") {
  const Fixture f = make_fixture(31);
  const CVec v = lifted(f.phi.phi);
  const auto [t1, t2] = update_t(f.coeffs, f.phi);

  const Complex num1 = f.coeffs.xi1.dot(v) * v.dot(f.coeffs.bigxi1 * v);
  const Complex den2 = (f.phi.phi.adjoint() * f.coeffs.r2 * f.phi.phi).value();
  CHECK(t1 * den2.real() == doctest::Approx(num1.real()).epsilon(1e-10));

  ReflectVector scaled{2.0 * f.phi.phi};
  const auto [s1, s2] = update_t(f.coeffs, scaled);
  CHECK(s1 == doctest::Approx(16.0 * t1).epsilon(1e-10));
  CHECK(s2 == doctest::Approx(16.0 * t2).epsilon(1e-10));
}

TEST_CASE("matrix-free operators agree with the materialized path") {
  const Fixture f = make_fixture(41);
  const auto [t1, t2] = update_t(f.coeffs, f.phi);
  const PhiCoefficients lean =
      compute_phi_coefficients(f.em, f.w, f.psi, f.ch, /*kron_cap=*/0);
  CHECK_FALSE(lean.kron_materialized);
  const auto [u1, u2] = update_t(lean, f.phi);
  CHECK(u1 == doctest::Approx(t1).epsilon(1e-10));
  CHECK(u2 == doctest::Approx(t2).epsilon(1e-10));

  const SurrogatePack dense = build_surrogates(f.coeffs, f.sconsts, t1, t2, f.phi, f.sc);
  const SurrogatePack lazy = build_surrogates(lean, f.sconsts, u1, u2, f.phi, f.sc);
  CHECK(lazy.lambda1_tilde == doctest::Approx(dense.lambda1_tilde).epsilon(1e-8));
  for (int i = 0; i < 2; ++i) {
    CHECK(lazy.lambda_y[i] ==
          doctest::Approx(dense.lambda_y[i]).epsilon(1e-7));
    CHECK((lazy.varrho_tilde[i] - dense.varrho_tilde[i]).cwiseAbs().maxCoeff() <
          1e-7 * (1.0 + dense.varrho_tilde[i].cwiseAbs().maxCoeff()));
    CHECK(lazy.kappa_tilde[i] ==
          doctest::Approx(dense.kappa_tilde[i]).epsilon(1e-7));
  }
}

TEST_CASE("identity embedding has curvature two") {
  CHECK(max_sym_embedding_eig(CMat::Identity(3, 3)) == doctest::Approx(2.0));
}

TEST_CASE("every surrogate is tangent at its anchor") {
  for (std::uint64_t seed = 51; seed <= 53; ++seed) {
    // Full-amplitude anchors: the box bound ||v||^2 <= M^2 a^4 used inside the
    // sextic majorizer is tight only there.
    Fixture f = make_fixture(seed, /*amp=*/4.0);
    const auto [t1, t2] = update_t(f.coeffs, f.phi);
    const SurrogatePack p = build_surrogates(f.coeffs, f.sconsts, t1, t2, f.phi, f.sc);
    const CVec& ph = f.phi.phi;

    const double obj_true = quartic_term(f.coeffs, ph);
    CHECK(std::abs(surrogate_objective(p, ph) - obj_true) <
          1e-8 * (1.0 + std::abs(obj_true)));

    for (int i = 0; i < 2; ++i) {
      const double row_true = true_fraction_row(f.coeffs, i, p.t[i], ph);
      const double scale =
          1.0 + std::abs((f.coeffs.xi1.dot(lifted(ph)) *
                          lifted(ph).dot(f.coeffs.bigxi1 * lifted(ph)))
                             .real());
      CHECK(std::abs(surrogate_fraction_row(p, i, ph) - row_true) < 1e-8 * scale);
    }

    for (int k = 0; k < f.sc.k_users; ++k) {
      const double row_true = true_sinr_row(f.sconsts, f.sc, k, ph);
      CHECK(std::abs(surrogate_sinr_row(p, f.sconsts, k, ph) - row_true) <
            1e-8 * (1.0 + std::abs(row_true)));
    }
  }
}

TEST_CASE("surrogates dominate the true terms across the amplitude box") {
  Rng rng(61);
  auto g = rng.stream(1);
  for (std::uint64_t seed = 61; seed <= 70; ++seed) {
    const Fixture f = make_fixture(seed, 3.0);
    const auto [t1, t2] = update_t(f.coeffs, f.phi);
    const SurrogatePack p = build_surrogates(f.coeffs, f.sconsts, t1, t2, f.phi, f.sc);
    for (int s = 0; s < 100; ++s) {
      CVec probe(f.phi.m());
      for (int j = 0; j < f.phi.m(); ++j)
        probe(j) = std::polar(f.sc.a_max * uniform01(g), 2.0 * M_PI * uniform01(g));

      const double obj_true = quartic_term(f.coeffs, probe);
      CHECK(surrogate_objective(p, probe) >=
            obj_true - 1e-8 * (1.0 + std::abs(obj_true)));

      for (int i = 0; i < 2; ++i) {
        const double row_true = true_fraction_row(f.coeffs, i, p.t[i], probe);
        CHECK(surrogate_fraction_row(p, i, probe) >=
              row_true - 1e-8 * (1.0 + std::abs(row_true)));
      }
      for (int k = 0; k < f.sc.k_users; ++k) {
        const double row_true = true_sinr_row(f.sconsts, f.sc, k, probe);
        CHECK(surrogate_sinr_row(p, f.sconsts, k, probe) >=
              row_true - 1e-8 * (1.0 + std::abs(row_true)));
      }
      // The boxed power quadratic over-approximates the true RIS draw.
      CHECK(relaxed_ris_power(f.sconsts, f.sc, probe) >=
            model::ris_power(f.ch, f.w, ReflectVector{probe}, f.sc) * (1.0 - 1e-10));
    }
  }
}

TEST_CASE("an amplitude cap the noise floor cannot support is rejected") {
  Fixture f = make_fixture(71);
  f.sc.p_ris = 1e-18;
  const auto [t1, t2] = update_t(f.coeffs, f.phi);
  const SurrogatePack p = build_surrogates(f.coeffs, f.sconsts, t1, t2, f.phi, f.sc);
  CHECK_THROWS_WITH_AS(build_phi_qcqp(p, f.sconsts, f.sc),
                       doctest::Contains("maximum feasible amplitude"),
                       std::invalid_argument);
}

TEST_CASE("echo-noise covariance update") {
  const Fixture f = make_fixture(81);
  SUBCASE("a dark surface leaves only receiver noise") {
    const CMat psi = update_psi(ReflectVector{CVec::Zero(4)}, f.ch, f.sc);
    CHECK((psi - f.sc.noise_bs * CMat::Identity(4, 4)).cwiseAbs().maxCoeff() == 0.0);
  }
  SUBCASE("random surfaces give a Hermitian matrix above the noise floor") {
    const CMat psi = update_psi(f.phi, f.ch, f.sc);
    CHECK((psi - psi.adjoint()).cwiseAbs().maxCoeff() < 1e-12 * psi.norm());
    Eigen::SelfAdjointEigenSolver<CMat> es(psi, Eigen::EigenvaluesOnly);
    CHECK(es.eigenvalues().minCoeff() >= f.sc.noise_bs * (1.0 - 1e-12));
  }
}

TEST_CASE("one reflection step solves cleanly and descends on the surrogate") {
  const Fixture f = make_solved_fixture(91, /*amp=*/4.0);
  const auto [t1, t2] = update_t(f.coeffs, f.phi);
  const SurrogatePack p = build_surrogates(f.coeffs, f.sconsts, t1, t2, f.phi, f.sc);
  PhiQcqp q = build_phi_qcqp(p, f.sconsts, f.sc);
  conic::BarrierSolver solver;
  const auto sol = q.program.solve(solver, 1e-8);
  REQUIRE(sol.status == SolveStatus::Optimal);
  CHECK(sol.max_residual <= 1e-6);
  const CVec cand = q.program.value_complex(sol, q.phi);
  CHECK(cand.cwiseAbs().maxCoeff() <= f.sc.a_max + 1e-8);
  const double at_anchor = surrogate_objective(p, f.phi.phi);
  CHECK(surrogate_objective(p, cand) <=
        at_anchor + 1e-6 * (1.0 + std::abs(at_anchor)));
}

TEST_CASE("the inner loop is monotone, feasible, and traceable") {
  int loops_with_progress = 0;
  for (std::uint64_t seed = 101; seed <= 103; ++seed) {
    const Fixture f = make_solved_fixture(seed, /*amp=*/4.0);
    InnerOptions opts;
    opts.max_iters = 8;
    opts.check_domination = true;
    const InnerResult res = run_inner_loop(f.ch, f.w, f.phi, f.sc, opts);

    REQUIRE(!res.trace.empty());
    for (const auto& rec : res.trace) {
      CHECK(rec.objective_after <=
            rec.objective_before + 1e-6 * (1.0 + std::abs(rec.objective_before)));
      if (rec.status == "ok") CHECK(rec.solver_residual <= 1e-6);
    }
    CHECK(res.phi.max_amplitude() <= f.sc.a_max + 1e-8);

    // Accepted surfaces must honor the true constraints the step enforced.
    if (res.iterations > 0) {
      ++loops_with_progress;
      CHECK(model::ris_power(f.ch, f.w, res.phi, f.sc) <=
            f.sc.p_ris * (1.0 + 1e-6));
      for (int k = 0; k < f.sc.k_users; ++k)
        CHECK(model::sinr(k, f.ch, f.w, res.phi, f.sc) >=
              f.sc.sinr_targets[k] * (1.0 - 1e-5));
    }
  }
  CHECK(loops_with_progress >= 1);
}

TEST_CASE("unreachable SINR targets leave the surface untouched") {
  Fixture f = make_solved_fixture(111, /*amp=*/4.0);
  Scenario hard = f.sc;
  hard.set_uniform_sinr_target(1e8);
  InnerOptions opts;
  opts.max_iters = 3;
  const InnerResult res = run_inner_loop(f.ch, f.w, f.phi, hard, opts);
  CHECK(res.iterations == 0);
  CHECK((res.phi.phi - f.phi.phi).cwiseAbs().maxCoeff() == 0.0);
  REQUIRE(!res.trace.empty());
  CHECK(res.trace.back().status == "step-failed-exit");
}
