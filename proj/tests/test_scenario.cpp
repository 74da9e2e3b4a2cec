#include <cmath>

#include "arisac/scenario.hpp"
#include "doctest.h"

using namespace arisac;
using namespace arisac::scenario;

namespace {

Scenario desk_scenario() {
  Scenario sc;
  sc.n_antennas = 4;
  sc.m_elements = 4;
  sc.k_users = 2;
  sc.set_uniform_sinr_target(db_to_linear(10.0));
  return sc;
}

}  // namespace

TEST_CASE("path loss at the reference distance returns the reference gain") {
  CHECK(path_loss(1.0, 2.2, 1e-3, 1.0) == doctest::Approx(1e-3).epsilon(1e-14));
  CHECK(path_loss(3.7, 0.0, 5e-2, 3.7) == doctest::Approx(5e-2).epsilon(1e-14));
}

TEST_CASE("path loss with exponent 2 over one decade drops by 100x") {
  CHECK(path_loss(10.0, 2.0, 1e-3, 1.0) == doctest::Approx(1e-5).epsilon(1e-14));
}

TEST_CASE("path loss matches an independent scalar evaluation") {
  // 1e-3 * (1/50)^2.2, evaluated through logs instead of pow.
  const double expect = 1e-3 * std::exp(-2.2 * std::log(50.0));
  CHECK(path_loss(50.0, 2.2, 1e-3, 1.0) == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("path loss rejects non-positive distances") {
  CHECK_THROWS_AS(path_loss(0.0, 2.0, 1e-3, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(path_loss(-3.0, 2.0, 1e-3, 1.0), std::invalid_argument);
}

TEST_CASE("steering vector at broadside is all ones") {
  const CVec a = steering(2, 0.0);
  CHECK(std::abs(a(0) - 1.0) == 0.0);
  CHECK(std::abs(a(1) - 1.0) < 1e-15);
}

TEST_CASE("steering vector at endfire alternates sign") {
  const CVec a = steering(2, M_PI / 2.0);
  CHECK(std::abs(a(0) - 1.0) == 0.0);
  CHECK(std::abs(a(1) + 1.0) < 1e-12);
}

TEST_CASE("steering entries follow the per-element phase ramp") {
  const CVec a = steering(4, M_PI / 4.0);
  for (int i = 0; i < 4; ++i) {
    const Complex expect = std::polar(1.0, -M_PI * i / std::sqrt(2.0));
    CHECK(std::abs(a(i) - expect) < 1e-12);
  }
}

TEST_CASE("steering entries have unit modulus for arbitrary angles") {
  for (double theta : {-1.3, -0.2, 0.0, 0.7, 1.49}) {
    const CVec a = steering(6, theta);
    for (int i = 0; i < a.size(); ++i) CHECK(std::abs(std::abs(a(i)) - 1.0) < 1e-14);
  }
}

TEST_CASE("default geometry places the target at 45 degrees from the RIS") {
  Scenario sc;
  CHECK(doa_from_geometry(sc.ris_pos, sc.target_pos) ==
        doctest::Approx(M_PI / 4.0).epsilon(1e-12));
}

TEST_CASE("scenario validation reports every violation") {
  Scenario sc = desk_scenario();
  sc.a_max = 0.5;
  sc.p_ris = -1.0;
  const auto errs = sc.validate();
  REQUIRE(errs.size() == 2);
  CHECK(errs[0].find("p_ris") != std::string::npos);
  CHECK(errs[1].find("a_max") != std::string::npos);
  CHECK_THROWS_AS(sc.require_valid(), std::invalid_argument);
}

TEST_CASE("same seed reproduces a bit-identical channel draw") {
  const Scenario sc = desk_scenario();
  const ChannelSet a = synthesize_channels(sc);
  const ChannelSet b = synthesize_channels(sc);
  CHECK((a.g - b.g).cwiseAbs().maxCoeff() == 0.0);
  for (int k = 0; k < sc.k_users; ++k) {
    CHECK((a.h_d[k] - b.h_d[k]).cwiseAbs().maxCoeff() == 0.0);
    CHECK((a.h_r[k] - b.h_r[k]).cwiseAbs().maxCoeff() == 0.0);
  }
  CHECK((a.h_rt - b.h_rt).cwiseAbs().maxCoeff() == 0.0);
  CHECK(a.theta == b.theta);
  CHECK(a.alpha_rt == b.alpha_rt);
}

TEST_CASE("adding users does not perturb the BS-RIS draw") {
  Scenario sc = desk_scenario();
  const ChannelSet a = synthesize_channels(sc);
  sc.k_users = 4;
  sc.set_uniform_sinr_target(db_to_linear(10.0));
  const ChannelSet b = synthesize_channels(sc);
  CHECK((a.g - b.g).cwiseAbs().maxCoeff() == 0.0);
  // Existing users keep their small-scale fades too.
  CHECK((a.h_d[0] - b.h_d[0]).cwiseAbs().maxCoeff() == 0.0);
  CHECK((a.h_r[1] - b.h_r[1]).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("target channel is exactly the scaled steering vector") {
  const ChannelSet ch = synthesize_channels(desk_scenario());
  const CVec expect = ch.alpha_rt * steering(static_cast<int>(ch.h_rt.size()), ch.theta);
  CHECK((ch.h_rt - expect).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("huge Rician factor collapses the BS-RIS channel onto its LoS ray") {
  Scenario sc = desk_scenario();
  sc.rician_k = 1e14;
  const ChannelSet ch = synthesize_channels(sc);
  const double pl = path_loss(distance(sc.bs_pos, sc.ris_pos), sc.pl_exp_bs_ris,
                              sc.pathloss_ref, sc.pathloss_d0);
  // LoS entries all have magnitude sqrt(PL) ...
  for (int i = 0; i < ch.g.rows(); ++i)
    for (int j = 0; j < ch.g.cols(); ++j)
      CHECK(std::abs(ch.g(i, j)) == doctest::Approx(std::sqrt(pl)).epsilon(1e-5));
  // ... and the matrix is (numerically) rank one.
  Eigen::JacobiSVD<CMat> svd(ch.g);
  CHECK(svd.singularValues()(1) < 1e-5 * svd.singularValues()(0));
}

TEST_CASE("channel second moments match the path-loss calibration") {
  Scenario sc = desk_scenario();
  sc.k_users = 1;
  sc.set_uniform_sinr_target(db_to_linear(10.0));
  const int n_draws = 10000;

  double sum_hd = 0.0, sum_hr = 0.0, sum_g = 0.0;
  double pred_hd = 0.0, pred_hr = 0.0;
  for (int d = 0; d < n_draws; ++d) {
    sc.seed = 1000 + static_cast<std::uint64_t>(d);
    const ChannelSet ch = synthesize_channels(sc);
    sum_hd += ch.h_d[0].squaredNorm();
    sum_hr += ch.h_r[0].squaredNorm();
    sum_g += ch.g.squaredNorm();
  }
  // User distances vary per draw (random angle on the circle), so the
  // prediction is the expectation of the path loss over the circle, by
  // quadrature in the angle.
  const int quad = 4096;
  for (int i = 0; i < quad; ++i) {
    const double ang = 2.0 * M_PI * (i + 0.5) / quad;
    const Position u{sc.user_center.x + sc.user_radius * std::cos(ang),
                     sc.user_center.y + sc.user_radius * std::sin(ang)};
    pred_hd += path_loss(distance(sc.bs_pos, u), sc.pl_exp_bs_user, sc.pathloss_ref,
                         sc.pathloss_d0);
    pred_hr += path_loss(distance(sc.ris_pos, u), sc.pl_exp_ris_user, sc.pathloss_ref,
                         sc.pathloss_d0);
  }
  pred_hd *= static_cast<double>(sc.n_antennas) / quad;
  pred_hr *= static_cast<double>(sc.m_elements) / quad;

  const double pl_g = path_loss(distance(sc.bs_pos, sc.ris_pos), sc.pl_exp_bs_ris,
                                sc.pathloss_ref, sc.pathloss_d0);
  const double pred_g = pl_g * sc.n_antennas * sc.m_elements;

  CHECK(sum_hd / n_draws == doctest::Approx(pred_hd).epsilon(0.03));
  CHECK(sum_hr / n_draws == doctest::Approx(pred_hr).epsilon(0.03));
  CHECK(sum_g / n_draws == doctest::Approx(pred_g).epsilon(0.03));
}
