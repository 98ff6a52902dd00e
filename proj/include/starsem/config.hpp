#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace starsem {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Position {
  double x = 0.0;
  double y = 0.0;
};

double distance(const Position& a, const Position& b);

// Full scenario description: geometry, radio constants, model and training
// hyper-parameters. Immutable after validate(); safe to share across workers.
struct SystemConfig {
  Position bs_position{0.0, 0.0};
  Position ris_position{40.0, 5.0};  // x component is the sweepable L
  Position eve_position{40.0, 0.0};
  Position bob_position{100.0, 10.0};

  int num_bs_antennas = 4;        // M
  int num_transmit_elements = 32; // N_t
  int num_reflect_elements = 32;  // N_r

  double bs_power = 1.0;          // P_BS, watts
  double noise_power_bob = 1e-12; // sigma_L^2, watts (-90 dBm)
  double noise_power_eve = 1e-12; // sigma_E^2, watts

  double pathloss_ref_db = 30.0;  // PL_0
  double pathloss_ref_dist = 1.0; // d_0, meters
  double pathloss_exponent = 2.5;

  int symbol_count = 128;                  // K, complex symbols per image
  std::array<int, 3> image_dims{1, 28, 28}; // (c, h, w)
  double compressed_rate = 256.0 / 784.0;   // rho = 2K/(c*h*w)

  std::uint64_t master_seed = 1;

  // SET baseline (free parameters; the source method leaves them open)
  double set_lambda = 1.0;
  double set_epsilon = 0.8;

  // training / evaluation (desk scale)
  int batch_size = 64;
  double learning_rate = 0.01;
  int pretrain_epochs = 4;
  int finetune_epochs = 4;
  int eve_epochs = 8;
  int set_epochs = 3;
  int train_subset = 8000;
  int test_subset = 1000;
  int eval_trials = 5;
  bool fgsm_predicted_label = false; // use Eve's predicted label instead of the true one
  std::string data_dir = "data";

  double ris_x() const { return ris_position.x; }
  int source_dims() const { return image_dims[0] * image_dims[1] * image_dims[2]; }
};

// Returns the config unchanged iff every invariant holds; throws ConfigError
// naming the first violated invariant otherwise.
SystemConfig validate(SystemConfig cfg);

// Key-value round trip. All keys optional; absent keys keep defaults.
SystemConfig load_config(const std::string& path);
SystemConfig parse_config(const std::string& text, const std::string& origin = "<string>");
std::string serialize_config(const SystemConfig& cfg);
void save_config(const SystemConfig& cfg, const std::string& path);

// Derive a config with a different nominal compressed rate: K snaps to
// round(rate * c*h*w / 2) and the stored rate becomes exactly 2K/(c*h*w).
SystemConfig with_rate(SystemConfig cfg, double nominal_rate);
SystemConfig with_symbol_count(SystemConfig cfg, int k);

// Hash of the canonical serialization (16 hex digits).
std::string config_hash(const SystemConfig& cfg);
// Hash over the fields that influence training; evaluation-only knobs
// (num_reflect_elements, test_subset, eval_trials, fgsm flag, data_dir)
// are excluded so checkpoints stay valid across evaluation sweeps.
std::string train_hash(const SystemConfig& cfg);

}  // namespace starsem
