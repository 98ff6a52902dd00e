#include "starsem/nn/train.hpp"

#include <cmath>
#include <numeric>

#include "starsem/empower.hpp"
#include "starsem/nn/adam.hpp"
#include "starsem/rng.hpp"

namespace starsem::nn {

namespace {

std::vector<int> epoch_order(int n, Rng& rng) {
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  for (int i = n - 1; i > 0; --i) std::swap(order[i], order[rng.uniform_int(i + 1)]);
  return order;
}

Eigen::MatrixXf gather(const Eigen::MatrixXf& all, const std::vector<int>& order, int begin,
                       int end) {
  Eigen::MatrixXf out(all.rows(), end - begin);
  for (int i = begin; i < end; ++i) out.col(i - begin) = all.col(order[i]);
  return out;
}

std::vector<int> gather_labels(const std::vector<int>& labels, const std::vector<int>& order,
                               int begin, int end) {
  std::vector<int> out(end - begin);
  for (int i = begin; i < end; ++i) out[i - begin] = labels[order[i]];
  return out;
}

void add_noise(Eigen::MatrixXf& v, float sigma, Rng& rng) {
  for (Eigen::Index c = 0; c < v.cols(); ++c)
    for (Eigen::Index r = 0; r < v.rows(); ++r) v(r, c) += sigma * static_cast<float>(rng.gaussian());
}

void check_finite(double loss, const char* stage, int epoch, int step) {
  if (!std::isfinite(loss))
    throw NnError(std::string("training diverged (loss not finite) in ") + stage + " at epoch " +
                  std::to_string(epoch) + " step " + std::to_string(step));
}

// Per-batch Bob/Eve link statistics for channel-in-the-loop training.
struct BatchLink {
  double bob_gain = 0.0;   // |effective Bob coefficient|
  double eve_gain = 0.0;   // |h_BE^H w_p|
  double snr_linear = 0.0;
};

BatchLink draw_link(const SystemConfig& cfg, std::uint64_t seed) {
  const ChannelSet ch = sample_channels(cfg, seed);
  const EmpowerResult opt = alternate(ch, cfg);
  BatchLink link;
  link.snr_linear = opt.snr_linear;
  link.bob_gain = std::sqrt(opt.snr_linear * cfg.noise_power_bob);
  link.eve_gain = std::abs(ch.h_be.dot(opt.w_p.w));
  return link;
}

}  // namespace

LeNetClassifier<float> pretrain_lenet(const Dataset& train, const SystemConfig& cfg,
                                      TrainMetrics* metrics) {
  if (train.count() == 0) throw NnError("pretrain_lenet: empty dataset");
  LeNetClassifier<float> model;
  Rng init_rng(derive_seed(cfg.master_seed, {stream_tag("lenet-init")}));
  model.init(init_rng);
  Adam<float> adam(cfg.learning_rate);
  auto params = model.params();

  for (int epoch = 0; epoch < cfg.pretrain_epochs; ++epoch) {
    Rng shuffle_rng(derive_seed(cfg.master_seed, {stream_tag("pretrain-shuffle"), (std::uint64_t)epoch}));
    const auto order = epoch_order(train.count(), shuffle_rng);
    double epoch_loss = 0.0;
    int steps = 0;
    for (int begin = 0; begin < train.count(); begin += cfg.batch_size, ++steps) {
      const int end = std::min(train.count(), begin + cfg.batch_size);
      const Eigen::MatrixXf x = gather(train.images, order, begin, end);
      const auto labels = gather_labels(train.labels, order, begin, end);
      Mat<float> dlogits;
      const float loss = cross_entropy<float>(model.forward(x), labels, &dlogits);
      check_finite(loss, "pretrain", epoch, steps);
      model.backward(dlogits);
      adam.step(params);
      epoch_loss += loss;
    }
    if (metrics) metrics->epoch_losses.push_back(epoch_loss / std::max(1, steps));
  }
  if (metrics && !metrics->epoch_losses.empty()) metrics->final_loss = metrics->epoch_losses.back();
  return model;
}

namespace {

// Shared loop behind train_joint (lambda == 0) and set_train (lambda >= 0).
// With lambda == 0 no Eve-side randomness is consumed, so both entry points
// produce bit-identical models for the same seed.
JointModels finetune_impl(const Dataset& train, const SystemConfig& cfg,
                          const LeNetClassifier<float>& pretrained, double lambda,
                          JscDecoder<float>* eve_frozen, TrainMetrics* metrics) {
  if (train.count() == 0) throw NnError("train_joint: empty dataset");
  if (lambda > 0.0 && eve_frozen == nullptr)
    throw NnError("set_train: lambda > 0 requires Eve's decoder");

  JointModels m{JscEncoder<float>(cfg.symbol_count), JscDecoder<float>(cfg.symbol_count)};
  Rng enc_rng(derive_seed(cfg.master_seed, {stream_tag("encoder-head-init")}));
  m.encoder.init(enc_rng);
  m.encoder.adopt_trunk(pretrained);
  Rng bob_rng(derive_seed(cfg.master_seed, {stream_tag("bob-decoder-init")}));
  m.bob.init(bob_rng);

  Adam<float> adam_enc(cfg.learning_rate);
  Adam<float> adam_bob(cfg.learning_rate);
  auto enc_params = m.encoder.params();
  auto bob_params = m.bob.params();

  double snr_db_sum = 0.0;
  long snr_count = 0;

  for (int epoch = 0; epoch < cfg.finetune_epochs; ++epoch) {
    Rng shuffle_rng(derive_seed(cfg.master_seed, {stream_tag("finetune-shuffle"), (std::uint64_t)epoch}));
    const auto order = epoch_order(train.count(), shuffle_rng);
    double epoch_loss = 0.0;
    int steps = 0;
    for (int begin = 0; begin < train.count(); begin += cfg.batch_size, ++steps) {
      const int end = std::min(train.count(), begin + cfg.batch_size);
      const Eigen::MatrixXf x = gather(train.images, order, begin, end);
      const auto labels = gather_labels(train.labels, order, begin, end);

      const BatchLink link = draw_link(
          cfg, derive_seed(cfg.master_seed, {stream_tag("finetune-chan"), (std::uint64_t)epoch,
                                             (std::uint64_t)steps}));
      snr_db_sum += 10.0 * std::log10(link.snr_linear);
      ++snr_count;

      Mat<float> v = m.encoder.forward(x);

      // Bob branch: equalized channel = identity + scaled noise.
      Mat<float> v_bob = v;
      const float sigma_bob =
          static_cast<float>(std::sqrt(cfg.noise_power_bob / 2.0) / link.bob_gain);
      Rng noise_rng(derive_seed(cfg.master_seed, {stream_tag("finetune-noise"), (std::uint64_t)epoch,
                                                  (std::uint64_t)steps}));
      add_noise(v_bob, sigma_bob, noise_rng);
      Mat<float> dlogits_bob;
      double loss = cross_entropy<float>(m.bob.forward(v_bob), labels, &dlogits_bob);
      Mat<float> dv = m.bob.backward(dlogits_bob);

      if (lambda > 0.0) {
        // Leakage term of the privacy-aware loss. The indicator (Eve's
        // softmax at the true label above epsilon) is treated as constant
        // per sample; its weight scales the cross-entropy gradient.
        Mat<float> v_eve = v;
        const float sigma_eve =
            static_cast<float>(std::sqrt(cfg.noise_power_eve / 2.0) / link.eve_gain);
        Rng eve_rng(derive_seed(cfg.master_seed, {stream_tag("set-eve-noise"), (std::uint64_t)epoch,
                                                  (std::uint64_t)steps}));
        add_noise(v_eve, sigma_eve, eve_rng);
        const Mat<float> eve_logits = eve_frozen->forward(v_eve);
        std::vector<float> weights(labels.size());
        for (std::size_t i = 0; i < labels.size(); ++i) {
          const Vec<float> p = softmax<float>(eve_logits.col(static_cast<Eigen::Index>(i)));
          weights[i] = p(labels[i]) > cfg.set_epsilon ? static_cast<float>(lambda) : 0.0f;
        }
        Mat<float> dlogits_eve;
        loss += cross_entropy_weighted<float>(eve_logits, labels, weights, &dlogits_eve);
        dv += eve_frozen->backward(dlogits_eve);  // Eve's decoder stays frozen
      }

      check_finite(loss, lambda > 0.0 ? "set_train" : "train_joint", epoch, steps);
      m.encoder.backward(dv);
      adam_enc.step(enc_params);
      adam_bob.step(bob_params);
      epoch_loss += loss;
    }
    if (metrics) metrics->epoch_losses.push_back(epoch_loss / std::max(1, steps));
  }
  if (metrics) {
    if (!metrics->epoch_losses.empty()) metrics->final_loss = metrics->epoch_losses.back();
    metrics->mean_link_snr_db = snr_count ? snr_db_sum / snr_count : 0.0;
  }
  return m;
}

}  // namespace

JointModels train_joint(const Dataset& train, const SystemConfig& cfg,
                        const LeNetClassifier<float>& pretrained, TrainMetrics* metrics) {
  return finetune_impl(train, cfg, pretrained, 0.0, nullptr, metrics);
}

JointModels set_train(const Dataset& train, const SystemConfig& cfg,
                      const LeNetClassifier<float>& pretrained, JscDecoder<float>& eve_frozen,
                      TrainMetrics* metrics) {
  SystemConfig set_cfg = cfg;
  set_cfg.finetune_epochs = cfg.set_epochs;
  return finetune_impl(train, set_cfg, pretrained, cfg.set_lambda, &eve_frozen, metrics);
}

JscDecoder<float> train_eve(const Dataset& train, const SystemConfig& cfg,
                            JscEncoder<float>& encoder, TrainMetrics* metrics) {
  if (train.count() == 0) throw NnError("train_eve: empty dataset");
  // The encoder is frozen, so encode the whole set once.
  Eigen::MatrixXf features(2 * cfg.symbol_count, train.count());
  for (int begin = 0; begin < train.count(); begin += 256) {
    const int end = std::min(train.count(), begin + 256);
    features.middleCols(begin, end - begin) =
        encoder.forward(train.images.middleCols(begin, end - begin));
  }

  JscDecoder<float> eve(cfg.symbol_count);
  Rng init_rng(derive_seed(cfg.master_seed, {stream_tag("eve-decoder-init")}));
  eve.init(init_rng);
  Adam<float> adam(cfg.learning_rate);
  auto params = eve.params();

  for (int epoch = 0; epoch < cfg.eve_epochs; ++epoch) {
    Rng shuffle_rng(derive_seed(cfg.master_seed, {stream_tag("eve-shuffle"), (std::uint64_t)epoch}));
    const auto order = epoch_order(train.count(), shuffle_rng);
    double epoch_loss = 0.0;
    int steps = 0;
    for (int begin = 0; begin < train.count(); begin += cfg.batch_size, ++steps) {
      const int end = std::min(train.count(), begin + cfg.batch_size);
      Eigen::MatrixXf v = gather(features, order, begin, end);
      const auto labels = gather_labels(train.labels, order, begin, end);

      const BatchLink link = draw_link(
          cfg, derive_seed(cfg.master_seed, {stream_tag("eve-chan"), (std::uint64_t)epoch,
                                             (std::uint64_t)steps}));
      const float sigma =
          static_cast<float>(std::sqrt(cfg.noise_power_eve / 2.0) / link.eve_gain);
      Rng noise_rng(derive_seed(cfg.master_seed, {stream_tag("eve-noise"), (std::uint64_t)epoch,
                                                  (std::uint64_t)steps}));
      add_noise(v, sigma, noise_rng);

      Mat<float> dlogits;
      const float loss = cross_entropy<float>(eve.forward(v), labels, &dlogits);
      check_finite(loss, "train_eve", epoch, steps);
      eve.backward(dlogits);
      adam.step(params);
      epoch_loss += loss;
    }
    if (metrics) metrics->epoch_losses.push_back(epoch_loss / std::max(1, steps));
  }
  if (metrics && !metrics->epoch_losses.empty()) metrics->final_loss = metrics->epoch_losses.back();
  return eve;
}

double clean_accuracy(JscEncoder<float>& encoder, JscDecoder<float>& decoder, const Dataset& data,
                      int batch_size) {
  long correct = 0;
  for (int begin = 0; begin < data.count(); begin += batch_size) {
    const int end = std::min(data.count(), begin + batch_size);
    const Mat<float> logits =
        decoder.forward(encoder.forward(data.images.middleCols(begin, end - begin)));
    for (int i = begin; i < end; ++i)
      if (argmax_class<float>(logits.col(i - begin)) == data.labels[i]) ++correct;
  }
  return static_cast<double>(correct) / data.count();
}

double classifier_accuracy(LeNetClassifier<float>& model, const Dataset& data, int batch_size) {
  long correct = 0;
  for (int begin = 0; begin < data.count(); begin += batch_size) {
    const int end = std::min(data.count(), begin + batch_size);
    const Mat<float> logits = model.forward(data.images.middleCols(begin, end - begin));
    for (int i = begin; i < end; ++i)
      if (argmax_class<float>(logits.col(i - begin)) == data.labels[i]) ++correct;
  }
  return static_cast<double>(correct) / data.count();
}

}  // namespace starsem::nn
