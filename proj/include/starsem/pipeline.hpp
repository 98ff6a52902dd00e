#pragma once

#include "starsem/empower.hpp"
#include "starsem/nn/data.hpp"
#include "starsem/nn/models.hpp"
#include "starsem/privacy.hpp"

namespace starsem {

struct PipelineError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Optimized link for one channel realization, with the derived scalars every
// transmission needs.
struct LinkState {
  ChannelSet channels;
  Beamformer w_p;
  TransmissionConfig q_t;
  Complex bob_effective{};  // q_t-weighted Bob cascade coefficient
  Complex eve_direct{};     // h_BE^H w_p
  CascadedTerms eve_terms;  // per reflect element, under w_p
  double bob_snr_linear = 0.0;
};

LinkState build_link(const ChannelSet& ch, const SystemConfig& cfg);

struct Prediction {
  Eigen::VectorXf logits;
  int y = 0;
};

struct NoiseSpec {
  double sigma2_bob = 0.0;
  double sigma2_eve = 0.0;
  std::uint64_t seed = 0;
};

struct ModelBundle {
  nn::JscEncoder<float> encoder;
  nn::JscDecoder<float> bob_decoder;
  nn::JscDecoder<float> eve_decoder;
};

// Everything observable about one image transmission. r_e includes the
// interference; r_a is kept separately for analysis (zero under None/Set).
struct TransmissionRecord {
  CVector s;
  CVector r_l, r_e, r_a;
  Eigen::VectorXf v_l, v_e;
  Prediction y_l, y_e;
  int label = 0;
  std::uint64_t noise_seed = 0;
};

struct TransmitOptions {
  bool fgsm_predicted_label = false;
};

TransmissionRecord transmit(const nn::ImageSample& x, const LinkState& link, ProtectionMode mode,
                            ModelBundle& models, const NoiseSpec& noise,
                            const TransmitOptions& opt = {});

// Same, but with the encoded signal supplied (evaluation reuses one encode
// across modes).
TransmissionRecord transmit_signal(const CVector& s, int label, const LinkState& link,
                                   ProtectionMode mode, ModelBundle& models,
                                   const NoiseSpec& noise, const TransmitOptions& opt = {});

struct ModeEval {
  ProtectionMode mode;
  ModelBundle* models;
};

struct EvalRates {
  ProtectionMode mode = ProtectionMode::None;
  double bob_rate = 0.0;
  double eve_rate = 0.0;
  double mean_bob_snr_db = 0.0;
  double mean_eve_power_db = 0.0;  // deterministic part of Eve's received power
  long records = 0;
};

// Success rates over min(test.count, cfg.test_subset) images x cfg.eval_trials
// independent channel realizations (block fading per image). All modes share
// the per-record channel and noise streams, so comparisons are paired and
// Bob's path is bit-identical across modes. Deterministic in cfg.master_seed.
std::vector<EvalRates> evaluate(const nn::Dataset& test, const SystemConfig& cfg,
                                const std::vector<ModeEval>& modes);

// Per-record CSV for the visualization path: original pixels, transmitted
// signal, attack and fused vectors in Eve's equalized domain, predictions.
void export_records_csv(const std::string& path, const nn::Dataset& test, const SystemConfig& cfg,
                        const std::vector<ModeEval>& modes, int n_images);

}  // namespace starsem
