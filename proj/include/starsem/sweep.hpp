#pragma once

#include <map>
#include <memory>
#include <optional>

#include "starsem/nn/train.hpp"
#include "starsem/pipeline.hpp"

namespace starsem {

struct SweepError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class SweepVariable { ReflectElements, RisX, CompressedRate };

const char* sweep_variable_name(SweepVariable v);
SweepVariable sweep_variable_from_name(const std::string& name);

struct SweepSpec {
  SweepVariable variable = SweepVariable::ReflectElements;
  std::vector<double> values;
  std::vector<ProtectionMode> modes;
  int trials = 1;
};

struct SweepRow {
  std::string variable;
  double value = 0.0;
  std::string mode;
  int trial = 0;
  double bob_rate = 0.0;
  double eve_rate = 0.0;
  double bob_snr_db = 0.0;
  double eve_power_db = 0.0;
  std::uint64_t seed = 0;
  std::string config_hash;
};

// Per-bundle training summary persisted in the checkpoint manifest.
struct BundleMetrics {
  double finetune_loss = 0.0;
  double eve_loss = 0.0;
  double mean_link_snr_db = 0.0;
  double bob_clean_accuracy = 0.0;
  double eve_clean_accuracy = 0.0;
};

// Trained model bundles keyed by symbol count (plus the SET variant), each
// carrying the training-config hash used for compatibility checks.
class BundleStore {
 public:
  void put(int symbol_count, bool set_variant, std::unique_ptr<ModelBundle> bundle,
           std::string train_hash, BundleMetrics metrics = {});
  bool has(int symbol_count, bool set_variant) const;
  // Throws SweepError when absent or when the stored training hash does not
  // match the requested config's.
  ModelBundle& get(int symbol_count, bool set_variant, const std::string& expected_hash);
  const std::map<std::pair<int, bool>, std::string>& hashes() const { return hashes_; }
  const std::map<std::pair<int, bool>, BundleMetrics>& metrics() const { return metrics_; }

 private:
  std::map<std::pair<int, bool>, std::unique_ptr<ModelBundle>> bundles_;
  std::map<std::pair<int, bool>, std::string> hashes_;
  std::map<std::pair<int, bool>, BundleMetrics> metrics_;
};

// Encoder + Bob decoder fine-tuned through the link, then the worst-case Eve
// decoder fitted against that encoder.
std::unique_ptr<ModelBundle> train_bundle(const nn::Dataset& train, const SystemConfig& cfg,
                                          const nn::LeNetClassifier<float>& pretrained,
                                          BundleMetrics* metrics = nullptr);

// SET variant: privacy-aware encoder training against a frozen Eve decoder,
// then a fresh worst-case Eve retrained against the SET encoder.
std::unique_ptr<ModelBundle> train_set_bundle(const nn::Dataset& train, const SystemConfig& cfg,
                                              const nn::LeNetClassifier<float>& pretrained,
                                              nn::JscDecoder<float>& eve_frozen,
                                              BundleMetrics* metrics = nullptr);

// Applies one sweep value to the base config (validated).
SystemConfig apply_sweep_value(SystemConfig base, SweepVariable var, double value);

// One row per (value, mode, trial), in declared order. Modes at the same
// (value, trial) share channel and noise realizations, so comparisons are
// paired. Rerunning with the same base config reproduces every row bit-wise.
std::vector<SweepRow> run_sweep(const nn::Dataset& test, const SystemConfig& base,
                                const SweepSpec& spec, BundleStore& store);

void write_sweep_csv(const std::vector<SweepRow>& rows, const std::string& path);
std::string sweep_csv_string(const std::vector<SweepRow>& rows);
void write_sweep_svg(const std::vector<SweepRow>& rows, const std::string& path);

// Checkpoint directory layout: <dir>/manifest.json plus one .ckpt per model.
void save_bundle_dir(const std::string& dir, const SystemConfig& base_cfg, BundleStore& store);
BundleStore load_bundle_dir(const std::string& dir);

}  // namespace starsem
