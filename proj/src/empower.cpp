#include "starsem/empower.hpp"

#include <cmath>

namespace starsem {

CVector bob_effective_row(const ChannelSet& ch, const TransmissionConfig& q_t) {
  // (q .* conj(h_il))^T H_bt as a column vector g, coefficient = g^T w.
  return ch.h_bt.transpose() * q_t.q.cwiseProduct(ch.h_il.conjugate());
}

Beamformer mrt_beamformer(const ChannelSet& ch, const TransmissionConfig& q_t, double p_bs) {
  const CVector g = bob_effective_row(ch, q_t);
  const double norm = g.norm();
  if (!(norm > 0.0)) throw EmpowerError("mrt_beamformer: zero effective channel");
  Beamformer b;
  b.w = std::sqrt(p_bs) / norm * g.conjugate();
  return b;
}

TransmissionConfig optimal_tcv(const ChannelSet& ch, const Beamformer& w_p) {
  const CascadedTerms terms = cascaded_terms(ch.h_il, ch.h_bt, w_p.w, Side::Transmit);
  TransmissionConfig q;
  q.q = terms.a.unaryExpr([](Complex a) { return std::polar(1.0, -std::arg(a)); });
  return q;
}

EmpowerResult alternate(const ChannelSet& ch, const SystemConfig& cfg, double tol, int max_iter) {
  EmpowerResult res;
  res.q_t = TransmissionConfig::flat(cfg.num_transmit_elements);

  double prev_snr = 0.0;
  for (int it = 1; it <= max_iter; ++it) {
    res.w_p = mrt_beamformer(ch, res.q_t, cfg.bs_power);
    res.q_t = optimal_tcv(ch, res.w_p);
    const CascadedTerms terms = cascaded_terms(ch.h_il, ch.h_bt, res.w_p.w, Side::Transmit);
    const Complex coeff = effective_coefficient(res.q_t, terms);
    const double snr = std::norm(coeff) / cfg.noise_power_bob;
    res.iterations = it;
    res.snr_linear = snr;
    if (it > 1 && snr - prev_snr < tol * prev_snr) {
      res.converged = true;
      break;
    }
    prev_snr = snr;
  }
  return res;
}

}  // namespace starsem
