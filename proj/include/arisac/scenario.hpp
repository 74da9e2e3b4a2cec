#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "arisac/types.hpp"

namespace arisac::scenario {

struct Position {
  double x = 0.0;
  double y = 0.0;
};

inline double distance(const Position& a, const Position& b) {
  return std::hypot(a.x - b.x, a.y - b.y);
}

// Full experiment configuration.  All powers in watts, all SINR/Rician
// factors linear, distances in meters.
struct Scenario {
  int n_antennas = 16;  // N (transmit = receive)
  int m_elements = 8;   // M
  int k_users = 2;      // K
  int n_samples = 1024; // L

  double p_bs = dbm_to_watt(23.0);
  double p_ris = dbm_to_watt(10.0);
  double a_max = 8.0;
  std::vector<double> sinr_targets = {};  // linear gamma_k; resized to k_users

  double noise_user = dbm_to_watt(-80.0);  // sigma_k^2 (common to all users)
  double noise_ris = dbm_to_watt(-80.0);   // sigma_z^2
  double noise_bs = dbm_to_watt(-80.0);    // sigma_r^2
  double rcs_var = 1.0;                    // sigma_t^2

  Position bs_pos{0.0, 0.0};
  Position ris_pos{0.0, 50.0};
  Position target_pos{3.0, 47.0};
  Position user_center{-10.0, 40.0};
  double user_radius = 5.0;

  double pl_exp_bs_ris = 2.2;
  double pl_exp_bs_user = 3.5;
  double pl_exp_ris_user = 2.3;
  double pl_exp_ris_target = 2.2;
  double pathloss_ref = 1e-3;  // C_0 (linear) at d_0
  double pathloss_d0 = 1.0;    // d_0 [m]

  double rician_k = db_to_linear(3.0);  // BS-RIS Rician factor (linear)

  std::uint64_t seed = 1;

  // Applies gamma to every user and resizes the target list to k_users.
  void set_uniform_sinr_target(double gamma_linear) {
    sinr_targets.assign(static_cast<std::size_t>(k_users), gamma_linear);
  }

  // Returns a list of violated invariants (empty if valid).
  std::vector<std::string> validate() const;

  // Throws std::invalid_argument listing every violation.
  void require_valid() const;
};

// Realized channels for one scenario draw.
struct ChannelSet {
  CMat g;                  // M x N, BS -> RIS
  std::vector<CVec> h_d;   // K vectors, length N
  std::vector<CVec> h_r;   // K vectors, length M
  CVec h_rt;               // length M, = alpha_rt * steering(M, theta)
  double theta = 0.0;      // target DoA w.r.t. RIS [rad]
  double alpha_rt = 0.0;   // RIS-target path-loss amplitude
};

// PL(d) = C_0 (d_0/d)^iota.
double path_loss(double d, double exponent, double c0, double d0);

// a_M(theta) = [1, e^{-j pi sin t}, ..., e^{-j(M-1) pi sin t}]^T.
CVec steering(int m, double theta);

// DoA of `to` seen from a ULA at `from` facing the -y direction.
double doa_from_geometry(const Position& from, const Position& to);

ChannelSet synthesize_channels(const Scenario& sc);

}  // namespace arisac::scenario
