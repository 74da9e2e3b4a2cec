#include "arisac/scenario.hpp"

#include <cmath>
#include <sstream>

#include "arisac/rng.hpp"

namespace arisac::scenario {

namespace {

// Stream tags for the per-block RNG split.
enum StreamTag : std::uint64_t {
  kStreamG = 1,
  kStreamUserPlacement = 2,
  kStreamHdBase = 0x100,
  kStreamHrBase = 0x200,
};

}  // namespace

std::vector<std::string> Scenario::validate() const {
  std::vector<std::string> errs;
  auto need = [&](bool ok, const std::string& msg) {
    if (!ok) errs.push_back(msg);
  };
  need(n_antennas >= 1, "n_antennas must be >= 1");
  need(m_elements >= 1, "m_elements must be >= 1");
  need(k_users >= 0, "k_users must be >= 0");
  need(n_samples >= 1, "n_samples must be >= 1");
  need(p_bs > 0.0, "p_bs must be > 0");
  need(p_ris > 0.0, "p_ris must be > 0");
  need(a_max >= 1.0, "a_max must be >= 1");
  need(sinr_targets.size() == static_cast<std::size_t>(k_users),
       "sinr_targets must have one entry per user");
  for (std::size_t k = 0; k < sinr_targets.size(); ++k)
    need(sinr_targets[k] > 0.0, "sinr_targets[" + std::to_string(k) + "] must be > 0");
  need(noise_user > 0.0, "noise_user must be > 0");
  need(noise_ris > 0.0, "noise_ris must be > 0");
  need(noise_bs > 0.0, "noise_bs must be > 0");
  need(rcs_var > 0.0, "rcs_var must be > 0");
  need(user_radius > 0.0, "user_radius must be > 0");
  need(pathloss_ref > 0.0, "pathloss_ref must be > 0");
  need(pathloss_d0 > 0.0, "pathloss_d0 must be > 0");
  need(rician_k > 0.0, "rician_k must be > 0");
  need(distance(bs_pos, ris_pos) > 0.0, "BS and RIS must not be co-located");
  need(distance(ris_pos, target_pos) > 0.0, "RIS and target must not be co-located");
  return errs;
}

void Scenario::require_valid() const {
  const auto errs = validate();
  if (errs.empty()) return;
  std::ostringstream oss;
  oss << "invalid scenario:";
  for (const auto& e : errs) oss << "\n  - " << e;
  throw std::invalid_argument(oss.str());
}

double path_loss(double d, double exponent, double c0, double d0) {
  if (d <= 0.0) throw std::invalid_argument("path_loss: distance must be > 0");
  return c0 * std::pow(d0 / d, exponent);
}

CVec steering(int m, double theta) {
  if (m < 1) throw std::invalid_argument("steering: m must be >= 1");
  CVec a(m);
  const double s = std::sin(theta);
  for (int i = 0; i < m; ++i) a(i) = std::exp(-kImag * (M_PI * i * s));
  a(0) = 1.0;
  return a;
}

double doa_from_geometry(const Position& from, const Position& to) {
  // Array boresight points toward -y; positive angles toward +x.
  return std::atan2(to.x - from.x, from.y - to.y);
}

ChannelSet synthesize_channels(const Scenario& sc) {
  sc.require_valid();
  const Rng rng(sc.seed);
  const int n = sc.n_antennas;
  const int m = sc.m_elements;

  ChannelSet ch;

  // BS-RIS: Rician with LoS component built from geometry-derived angles.
  {
    const double d = distance(sc.bs_pos, sc.ris_pos);
    const double pl = path_loss(d, sc.pl_exp_bs_ris, sc.pathloss_ref, sc.pathloss_d0);
    const double aod_bs = doa_from_geometry(sc.bs_pos, sc.ris_pos);
    const double aoa_ris = doa_from_geometry(sc.ris_pos, sc.bs_pos);
    const CMat los = steering(m, aoa_ris) * steering(n, aod_bs).transpose();
    auto g = rng.stream(kStreamG);
    const CMat nlos = cgaussian_matrix(g, m, n);
    const double kf = sc.rician_k;
    ch.g = std::sqrt(pl) *
           (std::sqrt(kf / (1.0 + kf)) * los + std::sqrt(1.0 / (1.0 + kf)) * nlos);
  }

  // Users sit on the stated circle at seeded random angles.
  std::vector<Position> users(static_cast<std::size_t>(sc.k_users));
  {
    auto g = rng.stream(kStreamUserPlacement);
    for (auto& u : users) {
      const double ang = 2.0 * M_PI * uniform01(g);
      u = {sc.user_center.x + sc.user_radius * std::cos(ang),
           sc.user_center.y + sc.user_radius * std::sin(ang)};
    }
  }

  ch.h_d.resize(users.size());
  ch.h_r.resize(users.size());
  for (std::size_t k = 0; k < users.size(); ++k) {
    const double d_bu = distance(sc.bs_pos, users[k]);
    const double d_ru = distance(sc.ris_pos, users[k]);
    const double pl_bu = path_loss(d_bu, sc.pl_exp_bs_user, sc.pathloss_ref, sc.pathloss_d0);
    const double pl_ru = path_loss(d_ru, sc.pl_exp_ris_user, sc.pathloss_ref, sc.pathloss_d0);
    auto gd = rng.stream(kStreamHdBase + k);
    auto gr = rng.stream(kStreamHrBase + k);
    ch.h_d[k] = std::sqrt(pl_bu) * cgaussian_matrix(gd, n, 1).col(0);
    ch.h_r[k] = std::sqrt(pl_ru) * cgaussian_matrix(gr, m, 1).col(0);
  }

  // RIS-target: pure LoS.
  {
    const double d = distance(sc.ris_pos, sc.target_pos);
    const double pl = path_loss(d, sc.pl_exp_ris_target, sc.pathloss_ref, sc.pathloss_d0);
    ch.theta = doa_from_geometry(sc.ris_pos, sc.target_pos);
    ch.alpha_rt = std::sqrt(pl);
    ch.h_rt = ch.alpha_rt * steering(m, ch.theta);
  }

  return ch;
}

}  // namespace arisac::scenario
