#pragma once

#include "arisac/scenario.hpp"
#include "arisac/types.hpp"

namespace arisac::model {

using scenario::ChannelSet;
using scenario::Scenario;

// W = [W_c W_r], N x (K+N).  Column i is w_i.
struct Precoder {
  CMat w;

  int n() const { return static_cast<int>(w.rows()); }
  int columns() const { return static_cast<int>(w.cols()); }
  double power() const { return w.squaredNorm(); }
  CMat covariance() const { return w * w.adjoint(); }  // R_w = W W^H
};

// Reflection coefficient vector phi with its diagonal lift.
struct ReflectVector {
  CVec phi;

  int m() const { return static_cast<int>(phi.size()); }
  CMat lift() const { return CVec(phi).asDiagonal().toDenseMatrix(); }
  double max_amplitude() const { return phi.size() ? phi.cwiseAbs().maxCoeff() : 0.0; }
};

// Deterministic echo quantities for a given (channels, phi).
struct EchoModel {
  CMat q;       // Q = G^T Phi h_rt h_rt^T Phi G, rank <= 1
  CMat q_dot;   // dQ/dtheta
  CMat r_n;     // R~_n = sigma_z^2 G^T Phi Phi^H G* + sigma_r^2 I
  CMat l_diag;  // L = diag{0..M-1}
  CMat a_diag;  // A = diag{a_M(theta)}
  Complex c0;   // alpha_rt^2 * j*pi*cos(theta)
};

// Compound downlink channel h_k^T = h_d,k^T + h_r,k^T Phi G (returned as a
// column vector h_k).
CVec compound_channel(int k, const ChannelSet& ch, const ReflectVector& phi);

// Eq-(3) SINR of user k (0-based index).  noise_ris may be overridden to 0
// for the passive-RIS variant via sc.noise_ris.
double sinr(int k, const ChannelSet& ch, const Precoder& w, const ReflectVector& phi,
            const Scenario& sc);

// Active-RIS power consumption P(W, phi): reflected signal power, echo
// amplification power, amplified echo of RIS noise, and twice-amplified
// RIS noise.
double ris_power(const ChannelSet& ch, const Precoder& w, const ReflectVector& phi,
                 const Scenario& sc);

EchoModel echo_model(const ChannelSet& ch, const ReflectVector& phi, const Scenario& sc);

}  // namespace arisac::model
