#pragma once

#include <map>
#include <string>

#include "starsem/nn/layers.hpp"

namespace starsem::nn {

struct CheckpointError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Checkpoint file: "STSMCKPT" magic, u32 version, u32 tensor count, then per
// tensor: u32 name length, name bytes, u32 rows, u32 cols, and rows*cols
// little-endian float32 values in row-major order.
void save_checkpoint(const std::string& path, const std::vector<Param<float>>& params);

std::map<std::string, Mat<float>> load_checkpoint(const std::string& path);

// Loads a checkpoint into an existing parameter list; every named tensor must
// exist with a matching shape so runs resume bit-identically.
void load_into(const std::string& path, const std::vector<Param<float>>& params);

}  // namespace starsem::nn
