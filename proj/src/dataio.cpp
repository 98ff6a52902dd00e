#include "starsem/dataio.hpp"

#include <zlib.h>

#include <filesystem>
#include <fstream>

namespace starsem {

namespace {

std::uint32_t be32(const std::vector<std::uint8_t>& b, std::size_t off) {
  return (std::uint32_t(b[off]) << 24) | (std::uint32_t(b[off + 1]) << 16) |
         (std::uint32_t(b[off + 2]) << 8) | std::uint32_t(b[off + 3]);
}

constexpr std::uint32_t kLabelsMagic = 0x00000801;
constexpr std::uint32_t kImagesMagic = 0x00000803;

}  // namespace

IdxHeader parse_idx_header(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < 4) throw DataError("IDX stream shorter than the magic field");
  IdxHeader h;
  h.magic = be32(bytes, 0);
  std::size_t ndim = 0;
  if (h.magic == kLabelsMagic) ndim = 1;
  else if (h.magic == kImagesMagic) ndim = 3;
  else throw DataError("bad IDX magic (expected 0x801 or 0x803)");
  if (bytes.size() < 4 + 4 * ndim) throw DataError("IDX stream truncated inside the header");
  for (std::size_t i = 0; i < ndim; ++i) h.dims.push_back(be32(bytes, 4 + 4 * i));
  return h;
}

Eigen::MatrixXf parse_idx_images(const std::vector<std::uint8_t>& bytes) {
  const IdxHeader h = parse_idx_header(bytes);
  if (h.magic != kImagesMagic) throw DataError("not an IDX image stream");
  const std::size_t n = h.dims[0], rows = h.dims[1], cols = h.dims[2];
  const std::size_t expected = 16 + n * rows * cols;
  if (bytes.size() != expected)
    throw DataError("IDX image payload truncated: expected " + std::to_string(expected) +
                    " bytes, got " + std::to_string(bytes.size()));
  Eigen::MatrixXf images(rows * cols, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t p = 0; p < rows * cols; ++p)
      images(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(i)) =
          static_cast<float>(bytes[16 + i * rows * cols + p]) / 255.0f;
  return images;
}

std::vector<int> parse_idx_labels(const std::vector<std::uint8_t>& bytes) {
  const IdxHeader h = parse_idx_header(bytes);
  if (h.magic != kLabelsMagic) throw DataError("not an IDX label stream");
  const std::size_t n = h.dims[0];
  const std::size_t expected = 8 + n;
  if (bytes.size() != expected)
    throw DataError("IDX label payload truncated: expected " + std::to_string(expected) +
                    " bytes, got " + std::to_string(bytes.size()));
  std::vector<int> labels(n);
  for (std::size_t i = 0; i < n; ++i) {
    labels[i] = bytes[8 + i];
    if (labels[i] > 9) throw DataError("label out of range at index " + std::to_string(i));
  }
  return labels;
}

namespace {

std::vector<std::uint8_t> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open: " + path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::vector<std::uint8_t> gunzip(const std::vector<std::uint8_t>& raw) {
  z_stream zs{};
  if (inflateInit2(&zs, 15 + 16) != Z_OK) throw DataError("zlib init failed");
  std::vector<std::uint8_t> out;
  std::uint8_t buf[1 << 16];
  zs.next_in = const_cast<Bytef*>(raw.data());
  zs.avail_in = static_cast<uInt>(raw.size());
  int rc = Z_OK;
  while (rc != Z_STREAM_END) {
    zs.next_out = buf;
    zs.avail_out = sizeof(buf);
    rc = inflate(&zs, Z_NO_FLUSH);
    if (rc != Z_OK && rc != Z_STREAM_END) {
      inflateEnd(&zs);
      throw DataError("gzip stream corrupt");
    }
    out.insert(out.end(), buf, buf + (sizeof(buf) - zs.avail_out));
  }
  inflateEnd(&zs);
  return out;
}

}  // namespace

std::vector<std::uint8_t> read_maybe_gzip(const std::string& path) {
  std::vector<std::uint8_t> raw = read_file(path);
  if (raw.size() >= 2 && raw[0] == 0x1f && raw[1] == 0x8b) return gunzip(raw);
  return raw;
}

nn::Dataset load_mnist(const std::string& dir, const std::string& stem, int limit) {
  const auto find = [&](const std::string& base) {
    namespace fs = std::filesystem;
    const std::string plain = dir + "/" + base;
    if (fs::exists(plain)) return plain;
    if (fs::exists(plain + ".gz")) return plain + ".gz";
    throw DataError("dataset file not found: " + plain + "[.gz] (run `starsem fetch-data` first)");
  };
  const auto images = parse_idx_images(read_maybe_gzip(find(stem + "-images-idx3-ubyte")));
  const auto labels = parse_idx_labels(read_maybe_gzip(find(stem + "-labels-idx1-ubyte")));
  if (static_cast<std::size_t>(images.cols()) != labels.size())
    throw DataError("image/label count mismatch in " + dir);
  nn::Dataset d{images, labels};
  if (limit >= 0 && limit < d.count()) d = d.head(limit);
  return d;
}

}  // namespace starsem
