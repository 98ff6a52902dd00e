#pragma once

#include <Eigen/Dense>
#include <complex>
#include <cstdint>
#include <iosfwd>
#include <string>

#include "starsem/config.hpp"

namespace starsem {

using Complex = std::complex<double>;
using CVector = Eigen::VectorXcd;
using CMatrix = Eigen::MatrixXcd;

struct ChannelError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// One small-scale realization of the five links. All entries are i.i.d.
// CN(0, g) with g the link's linear path-loss gain.
struct ChannelSet {
  CMatrix h_bt;  // N_t x M, BS -> transmit elements
  CMatrix h_br;  // N_r x M, BS -> reflect elements
  CVector h_be;  // M, BS -> Eve (column; its adjoint multiplies w_p)
  CVector h_il;  // N_t, transmit elements -> Bob
  CVector h_ie;  // N_r, reflect elements -> Eve
  std::uint64_t realization_seed = 0;
};

// PL(d) = PL_0 + 10 * exponent * log10(d / d_0), in dB. Throws on d <= 0.
double path_loss_db(double dist, const SystemConfig& cfg);

// 10^(-PL(d)/10)
double path_gain_linear(double dist, const SystemConfig& cfg);

// Pure function of (cfg, seed): identical inputs give bit-identical output.
// Entries are drawn row-major per link, in the order h_bt, h_br, h_be, h_il, h_ie.
ChannelSet sample_channels(const SystemConfig& cfg, std::uint64_t seed);

// Binary fixture blob: dimension header then little-endian f64 (re, im) pairs,
// row-major, links in the order above.
void dump_channels(const ChannelSet& ch, std::ostream& out);
ChannelSet load_channels(std::istream& in);
void dump_channels_file(const ChannelSet& ch, const std::string& path);
ChannelSet load_channels_file(const std::string& path);

}  // namespace starsem
