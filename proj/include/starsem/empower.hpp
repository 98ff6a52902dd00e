#pragma once

#include "starsem/starris.hpp"

namespace starsem {

struct EmpowerError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Beamformer {
  CVector w;  // length M, ||w||^2 <= P_BS (equality after an MRT update)
};

struct EmpowerResult {
  Beamformer w_p;
  TransmissionConfig q_t;
  double snr_linear = 0.0;
  int iterations = 0;
  bool converged = false;
};

// Bob's effective 1xM channel row under transmission coefficients q_t:
// g^T = (q_t .* conj(h_il))^T * H_bt, so that the received coefficient is g^T w.
CVector bob_effective_row(const ChannelSet& ch, const TransmissionConfig& q_t);

// Matched (maximum-ratio) beamformer for fixed q_t: w = sqrt(P) conj(g)/||g||.
// Throws on a zero effective channel.
Beamformer mrt_beamformer(const ChannelSet& ch, const TransmissionConfig& q_t, double p_bs);

// Co-phasing update for fixed w_p: phi_n = -arg(a_n) so every cascade term
// contributes its magnitude.
TransmissionConfig optimal_tcv(const ChannelSet& ch, const Beamformer& w_p);

// Alternate the two closed-form updates from the all-zero-phase start until
// the relative SNR gain drops below tol or max_iter is reached. The SNR
// sequence is non-decreasing (both block updates are exact maximizers).
EmpowerResult alternate(const ChannelSet& ch, const SystemConfig& cfg, double tol = 1e-6,
                        int max_iter = 50);

}  // namespace starsem
