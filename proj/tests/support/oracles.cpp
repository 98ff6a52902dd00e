#include "support/oracles.hpp"

#include <cmath>

#include "starsem/rng.hpp"

namespace starsem::verify {

double grid_search_best_snr(const ChannelSet& ch, const SystemConfig& cfg, int n_beams,
                            double step_deg, std::uint64_t seed) {
  const int m = static_cast<int>(ch.h_bt.cols());
  const int nt = static_cast<int>(ch.h_bt.rows());
  const int steps = static_cast<int>(std::lround(360.0 / step_deg));
  const double step = kTwoPi / steps;

  Rng rng(seed);
  double best = 0.0;
  for (int beam = 0; beam < n_beams; ++beam) {
    CVector w(m);
    for (int i = 0; i < m; ++i) w(i) = rng.cgaussian(1.0);
    w *= std::sqrt(cfg.bs_power) / w.norm();

    // Per-element cascade terms under this beam, summed elementwise.
    CVector a(nt);
    for (int n = 0; n < nt; ++n) {
      Complex hw{0.0, 0.0};
      for (int j = 0; j < m; ++j) hw += ch.h_bt(n, j) * w(j);
      a(n) = std::conj(ch.h_il(n)) * hw;
    }

    // Exhaustive grid over the nt-1 free phases (a global phase is free).
    double best_mag2 = 0.0;
    std::vector<int> idx(std::max(0, nt - 1), 0);
    while (true) {
      Complex sum = a(0);
      for (int n = 1; n < nt; ++n) sum += std::polar(1.0, idx[n - 1] * step) * a(n);
      best_mag2 = std::max(best_mag2, std::norm(sum));
      int pos = 0;
      while (pos < nt - 1 && ++idx[pos] == steps) idx[pos++] = 0;
      if (pos == nt - 1) break;
    }
    best = std::max(best, best_mag2 / cfg.noise_power_bob);
  }
  return best;
}

double subset_enum_min_residual(double d_abs, const std::vector<double>& mags) {
  const int n = static_cast<int>(mags.size());
  double best = d_abs;  // empty subset
  for (std::uint64_t mask = 1; mask < (1ULL << n); ++mask) {
    double sum = 0.0;
    for (int i = 0; i < n; ++i)
      if (mask & (1ULL << i)) sum += mags[i];
    best = std::min(best, std::abs(d_abs - sum));
  }
  return best;
}

double chi2_uniform_phases(const std::vector<double>& phases, int bins) {
  std::vector<long> counts(bins, 0);
  for (double p : phases) {
    int b = static_cast<int>(p / kTwoPi * bins);
    if (b < 0) b = 0;
    if (b >= bins) b = bins - 1;
    ++counts[b];
  }
  const double expected = static_cast<double>(phases.size()) / bins;
  double stat = 0.0;
  for (long c : counts) stat += (c - expected) * (c - expected) / expected;
  return stat;
}

}  // namespace starsem::verify
