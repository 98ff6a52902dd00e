#include "starsem/nn/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

namespace starsem::nn {

namespace {

constexpr char kMagic[8] = {'S', 'T', 'S', 'M', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::ostream& out, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                        static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t get_u32(std::istream& in) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  if (!in) throw CheckpointError("checkpoint truncated");
  return b[0] | (b[1] << 8) | (b[2] << 16) | (std::uint32_t(b[3]) << 24);
}

}  // namespace

void save_checkpoint(const std::string& path, const std::vector<Param<float>>& params) {
  static_assert(std::endian::native == std::endian::little, "little-endian host assumed");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw CheckpointError("cannot open checkpoint for writing: " + path);
  out.write(kMagic, 8);
  put_u32(out, kVersion);
  put_u32(out, static_cast<std::uint32_t>(params.size()));
  for (const auto& p : params) {
    put_u32(out, static_cast<std::uint32_t>(p.name.size()));
    out.write(p.name.data(), static_cast<std::streamsize>(p.name.size()));
    put_u32(out, static_cast<std::uint32_t>(p.value->rows()));
    put_u32(out, static_cast<std::uint32_t>(p.value->cols()));
    for (Eigen::Index r = 0; r < p.value->rows(); ++r)
      for (Eigen::Index c = 0; c < p.value->cols(); ++c) {
        const float v = (*p.value)(r, c);
        out.write(reinterpret_cast<const char*>(&v), 4);
      }
  }
  if (!out) throw CheckpointError("write failed: " + path);
}

std::map<std::string, Mat<float>> load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open checkpoint: " + path);
  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, kMagic, 8) != 0)
    throw CheckpointError("bad checkpoint magic: " + path);
  if (get_u32(in) != kVersion) throw CheckpointError("unsupported checkpoint version: " + path);
  const std::uint32_t count = get_u32(in);
  std::map<std::string, Mat<float>> tensors;
  for (std::uint32_t t = 0; t < count; ++t) {
    const std::uint32_t name_len = get_u32(in);
    std::string name(name_len, '\0');
    in.read(name.data(), name_len);
    const std::uint32_t rows = get_u32(in);
    const std::uint32_t cols = get_u32(in);
    Mat<float> m(rows, cols);
    for (std::uint32_t r = 0; r < rows; ++r)
      for (std::uint32_t c = 0; c < cols; ++c) {
        float v;
        in.read(reinterpret_cast<char*>(&v), 4);
        if (!in) throw CheckpointError("checkpoint truncated in tensor " + name);
        m(r, c) = v;
      }
    tensors.emplace(std::move(name), std::move(m));
  }
  return tensors;
}

void load_into(const std::string& path, const std::vector<Param<float>>& params) {
  const auto tensors = load_checkpoint(path);
  for (const auto& p : params) {
    const auto it = tensors.find(p.name);
    if (it == tensors.end()) throw CheckpointError("checkpoint missing tensor: " + p.name);
    if (it->second.rows() != p.value->rows() || it->second.cols() != p.value->cols())
      throw CheckpointError("checkpoint shape mismatch for tensor: " + p.name);
    *p.value = it->second;
  }
}

}  // namespace starsem::nn
