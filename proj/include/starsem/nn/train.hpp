#pragma once

#include "starsem/config.hpp"
#include "starsem/nn/data.hpp"
#include "starsem/nn/models.hpp"

namespace starsem::nn {

struct TrainMetrics {
  std::vector<double> epoch_losses;
  double final_loss = 0.0;
  double mean_link_snr_db = 0.0;  // Bob link SNR averaged over training batches
};

// Plain LeNet classifier pre-training (the "pre-trained LeNet" the encoder
// trunk is copied from).
LeNetClassifier<float> pretrain_lenet(const Dataset& train, const SystemConfig& cfg,
                                      TrainMetrics* metrics = nullptr);

struct JointModels {
  JscEncoder<float> encoder;
  JscDecoder<float> bob;
};

// Fine-tunes encoder + Bob decoder end-to-end through the simulated Bob link:
// per batch a channel realization is drawn, the link is optimized, and noise
// is injected at the resulting SNR (the equalized channel is identity plus
// scaled noise, so gradients pass through unchanged).
JointModels train_joint(const Dataset& train, const SystemConfig& cfg,
                        const LeNetClassifier<float>& pretrained,
                        TrainMetrics* metrics = nullptr);

// Freezes the encoder and fits Eve's decoder on her unprotected received
// vectors (worst-case eavesdropper).
JscDecoder<float> train_eve(const Dataset& train, const SystemConfig& cfg,
                            JscEncoder<float>& encoder, TrainMetrics* metrics = nullptr);

// Privacy-aware encoder training (the SET baseline): same loop as train_joint
// plus the leakage term computed through Eve's link against a frozen Eve
// decoder. With cfg.set_lambda == 0 this reproduces train_joint exactly
// (same random streams, same updates).
JointModels set_train(const Dataset& train, const SystemConfig& cfg,
                      const LeNetClassifier<float>& pretrained, JscDecoder<float>& eve_frozen,
                      TrainMetrics* metrics = nullptr);

// Fraction of samples whose argmax prediction matches the label, under a
// noiseless identity channel (model-quality diagnostic, not the link metric).
double clean_accuracy(JscEncoder<float>& encoder, JscDecoder<float>& decoder, const Dataset& data,
                      int batch_size = 256);
double classifier_accuracy(LeNetClassifier<float>& model, const Dataset& data,
                           int batch_size = 256);

}  // namespace starsem::nn
