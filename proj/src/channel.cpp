#include "starsem/channel.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include "starsem/rng.hpp"

namespace starsem {

double path_loss_db(double dist, const SystemConfig& cfg) {
  if (!(dist > 0.0)) throw ChannelError("path_loss_db: distance must be positive");
  return cfg.pathloss_ref_db + 10.0 * cfg.pathloss_exponent * std::log10(dist / cfg.pathloss_ref_dist);
}

double path_gain_linear(double dist, const SystemConfig& cfg) {
  return std::pow(10.0, -path_loss_db(dist, cfg) / 10.0);
}

namespace {

CMatrix draw_block(Rng& rng, int rows, int cols, double gain) {
  CMatrix m(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) m(r, c) = rng.cgaussian(gain);
  return m;
}

}  // namespace

ChannelSet sample_channels(const SystemConfig& cfg, std::uint64_t seed) {
  Rng rng(seed);
  // Both element groups sit at the surface midpoint, so they share path loss;
  // their small-scale fading is independent.
  const double g_bs_ris = path_gain_linear(distance(cfg.bs_position, cfg.ris_position), cfg);
  const double g_ris_bob = path_gain_linear(distance(cfg.ris_position, cfg.bob_position), cfg);
  const double g_ris_eve = path_gain_linear(distance(cfg.ris_position, cfg.eve_position), cfg);
  const double g_bs_eve = path_gain_linear(distance(cfg.bs_position, cfg.eve_position), cfg);

  ChannelSet ch;
  ch.realization_seed = seed;
  ch.h_bt = draw_block(rng, cfg.num_transmit_elements, cfg.num_bs_antennas, g_bs_ris);
  ch.h_br = draw_block(rng, cfg.num_reflect_elements, cfg.num_bs_antennas, g_bs_ris);
  ch.h_be = draw_block(rng, cfg.num_bs_antennas, 1, g_bs_eve).col(0);
  ch.h_il = draw_block(rng, cfg.num_transmit_elements, 1, g_ris_bob).col(0);
  ch.h_ie = draw_block(rng, cfg.num_reflect_elements, 1, g_ris_eve).col(0);
  return ch;
}

namespace {

void put_u32(std::ostream& out, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                        static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

void put_u64(std::ostream& out, std::uint64_t v) {
  put_u32(out, static_cast<std::uint32_t>(v));
  put_u32(out, static_cast<std::uint32_t>(v >> 32));
}

void put_f64(std::ostream& out, double v) {
  static_assert(std::endian::native == std::endian::little, "little-endian host assumed");
  out.write(reinterpret_cast<const char*>(&v), 8);
}

std::uint32_t get_u32(std::istream& in) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  if (!in) throw ChannelError("channel blob truncated");
  return b[0] | (b[1] << 8) | (b[2] << 16) | (std::uint32_t(b[3]) << 24);
}

std::uint64_t get_u64(std::istream& in) {
  const std::uint64_t lo = get_u32(in);
  const std::uint64_t hi = get_u32(in);
  return lo | (hi << 32);
}

double get_f64(std::istream& in) {
  double v;
  in.read(reinterpret_cast<char*>(&v), 8);
  if (!in) throw ChannelError("channel blob truncated");
  return v;
}

void put_block(std::ostream& out, const CMatrix& m) {
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      put_f64(out, m(r, c).real());
      put_f64(out, m(r, c).imag());
    }
}

CMatrix get_block(std::istream& in, int rows, int cols) {
  CMatrix m(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      const double re = get_f64(in);
      const double im = get_f64(in);
      m(r, c) = {re, im};
    }
  return m;
}

constexpr std::uint32_t kChannelMagic = 0x53544348;  // "STCH"

}  // namespace

void dump_channels(const ChannelSet& ch, std::ostream& out) {
  put_u32(out, kChannelMagic);
  put_u32(out, static_cast<std::uint32_t>(ch.h_bt.rows()));  // N_t
  put_u32(out, static_cast<std::uint32_t>(ch.h_br.rows()));  // N_r
  put_u32(out, static_cast<std::uint32_t>(ch.h_bt.cols()));  // M
  put_u64(out, ch.realization_seed);
  put_block(out, ch.h_bt);
  put_block(out, ch.h_br);
  put_block(out, ch.h_be);
  put_block(out, ch.h_il);
  put_block(out, ch.h_ie);
}

ChannelSet load_channels(std::istream& in) {
  if (get_u32(in) != kChannelMagic) throw ChannelError("channel blob: bad magic");
  const int nt = static_cast<int>(get_u32(in));
  const int nr = static_cast<int>(get_u32(in));
  const int m = static_cast<int>(get_u32(in));
  ChannelSet ch;
  ch.realization_seed = get_u64(in);
  ch.h_bt = get_block(in, nt, m);
  ch.h_br = get_block(in, nr, m);
  ch.h_be = get_block(in, m, 1).col(0);
  ch.h_il = get_block(in, nt, 1).col(0);
  ch.h_ie = get_block(in, nr, 1).col(0);
  return ch;
}

void dump_channels_file(const ChannelSet& ch, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ChannelError("cannot open for writing: " + path);
  dump_channels(ch, out);
}

ChannelSet load_channels_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ChannelError("cannot open: " + path);
  return load_channels(in);
}

}  // namespace starsem
