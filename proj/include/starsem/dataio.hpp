#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "starsem/nn/data.hpp"

namespace starsem {

struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct IdxHeader {
  std::uint32_t magic = 0;
  std::vector<std::uint32_t> dims;
};

// Big-endian IDX header; magic 0x801 carries one dimension (labels), 0x803
// carries three (images). Any other magic or dim count is an error.
IdxHeader parse_idx_header(const std::vector<std::uint8_t>& bytes);

// Pixels scaled to [0,1] by /255, one column per image, channel-major.
Eigen::MatrixXf parse_idx_images(const std::vector<std::uint8_t>& bytes);
std::vector<int> parse_idx_labels(const std::vector<std::uint8_t>& bytes);

// Reads a file, transparently inflating gzip (sniffed by the 1f 8b prefix).
std::vector<std::uint8_t> read_maybe_gzip(const std::string& path);

// Loads "<dir>/<stem>-images-idx3-ubyte[.gz]" + matching labels file, where
// stem is "train" or "t10k". limit < 0 keeps everything.
nn::Dataset load_mnist(const std::string& dir, const std::string& stem, int limit = -1);

}  // namespace starsem
