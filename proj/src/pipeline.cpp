#include "starsem/pipeline.hpp"

#include <cmath>
#include <fstream>

#include "starsem/reshape.hpp"

namespace starsem {

LinkState build_link(const ChannelSet& ch, const SystemConfig& cfg) {
  LinkState link;
  link.channels = ch;
  const EmpowerResult opt = alternate(ch, cfg);
  link.w_p = opt.w_p;
  link.q_t = opt.q_t;
  link.bob_snr_linear = opt.snr_linear;
  const CascadedTerms bob_terms = cascaded_terms(ch.h_il, ch.h_bt, opt.w_p.w, Side::Transmit);
  link.bob_effective = effective_coefficient(opt.q_t, bob_terms);
  link.eve_direct = ch.h_be.dot(opt.w_p.w);  // h_BE^H w_p
  link.eve_terms = cascaded_terms(ch.h_ie, ch.h_br, opt.w_p.w, Side::Reflect);
  return link;
}

namespace {

CVector draw_awgn(int n, double sigma2, Rng& rng) {
  CVector z(n);
  for (int k = 0; k < n; ++k) z(k) = rng.cgaussian(sigma2);
  return z;
}

Prediction decode(nn::JscDecoder<float>& dec, const Eigen::VectorXf& v) {
  Prediction p;
  p.logits = dec.forward(v).col(0);
  p.y = nn::argmax_class<float>(p.logits);
  return p;
}

Complex safe_inv(Complex c) {
  const double m = std::abs(c);
  return m > 0.0 ? 1.0 / c : Complex{0.0, 0.0};
}

}  // namespace

TransmissionRecord transmit_signal(const CVector& s, int label, const LinkState& link,
                                   ProtectionMode mode, ModelBundle& models,
                                   const NoiseSpec& noise, const TransmitOptions& opt) {
  const int k_count = static_cast<int>(s.size());
  TransmissionRecord rec;
  rec.s = s;
  rec.label = label;
  rec.noise_seed = noise.seed;

  Rng bob_noise_rng(derive_seed(noise.seed, {stream_tag("bob-noise")}));
  Rng eve_noise_rng(derive_seed(noise.seed, {stream_tag("eve-noise")}));
  Rng rcv_rng(derive_seed(noise.seed, {stream_tag("rcv")}));

  // Bob never sees the reflection side (mode-independent by construction).
  rec.r_l = link.bob_effective * s + draw_awgn(k_count, noise.sigma2_bob, bob_noise_rng);

  // Interference.
  const int n_r = static_cast<int>(link.eve_terms.a.size());
  rec.r_a = CVector::Zero(k_count);
  if (n_r > 0 && (mode == ProtectionMode::Snrlp || mode == ProtectionMode::TlpRandom ||
                  mode == ProtectionMode::Tlp)) {
    if (mode == ProtectionMode::Snrlp) {
      const ReflectionConfig rcv = snrlp_rcv(link.eve_direct, link.eve_terms);
      rec.r_a = effective_coefficient(rcv, link.eve_terms) * s;
    } else if (mode == ProtectionMode::TlpRandom) {
      for (int k = 0; k < k_count; ++k) {
        const ReflectionConfig rcv = random_rcv(n_r, rcv_rng);
        rec.r_a(k) = effective_coefficient(rcv, link.eve_terms) * s(k);
      }
    } else {
      const Eigen::VectorXf v_clean = to_float(reshape_to_real(s));
      const int y = opt.fgsm_predicted_label
                        ? nn::argmax_class<float>(models.eve_decoder.forward(v_clean).col(0))
                        : label;
      const FgsmDirection dir = fgsm_direction(models.eve_decoder, v_clean, y);
      // Eve equalizes by eve_direct, so the physical target phase carries an
      // extra arg(eve_direct) to land the perturbation on the FGSM quadrant.
      const double rot = std::arg(link.eve_direct);
      for (int k = 0; k < k_count; ++k) {
        if (std::abs(s(k)) == 0.0) continue;  // nothing transmitted, nothing reflected
        const ReflectionConfig rcv = tlp_rcv(link.eve_terms, s(k), dir.target_phases(k) + rot);
        rec.r_a(k) = effective_coefficient(rcv, link.eve_terms) * s(k);
      }
    }
  }

  rec.r_e = link.eve_direct * s + rec.r_a + draw_awgn(k_count, noise.sigma2_eve, eve_noise_rng);

  // Receivers equalize with their known direct coefficients; Eve cannot track
  // the per-symbol reflection pattern, so the interference survives.
  rec.v_l = to_float(reshape_to_real(rec.r_l * safe_inv(link.bob_effective)));
  rec.v_e = to_float(reshape_to_real(rec.r_e * safe_inv(link.eve_direct)));
  rec.y_l = decode(models.bob_decoder, rec.v_l);
  rec.y_e = decode(models.eve_decoder, rec.v_e);
  return rec;
}

TransmissionRecord transmit(const nn::ImageSample& x, const LinkState& link, ProtectionMode mode,
                            ModelBundle& models, const NoiseSpec& noise,
                            const TransmitOptions& opt) {
  const Eigen::VectorXf v = models.encoder.forward(x.pixels).col(0);
  const CVector s = reshape_to_complex(to_double(v));
  return transmit_signal(s, x.label, link, mode, models, noise, opt);
}

std::vector<EvalRates> evaluate(const nn::Dataset& test, const SystemConfig& cfg,
                                const std::vector<ModeEval>& modes) {
  if (test.count() == 0) throw PipelineError("evaluate: empty dataset");
  const int n_images = std::min(test.count(), cfg.test_subset);
  const int trials = cfg.eval_trials;
  const TransmitOptions opt{cfg.fgsm_predicted_label};

  std::vector<EvalRates> rates(modes.size());
  std::vector<double> eve_power_lin(modes.size(), 0.0);
  double snr_lin_sum = 0.0;
  for (std::size_t mi = 0; mi < modes.size(); ++mi) rates[mi].mode = modes[mi].mode;

  // Encoders are deterministic, so encode each test image once per distinct
  // encoder up front.
  std::vector<const nn::JscEncoder<float>*> encoders;
  std::vector<Eigen::MatrixXf> encoded;     // per distinct encoder: 2K x n_images
  std::vector<std::size_t> encoder_of_mode(modes.size());
  for (std::size_t mi = 0; mi < modes.size(); ++mi) {
    const nn::JscEncoder<float>* enc = &modes[mi].models->encoder;
    std::size_t idx = encoders.size();
    for (std::size_t e = 0; e < encoders.size(); ++e)
      if (encoders[e] == enc) idx = e;
    if (idx == encoders.size()) {
      encoders.push_back(enc);
      Eigen::MatrixXf v(2 * modes[mi].models->encoder.symbol_count, n_images);
      for (int begin = 0; begin < n_images; begin += 256) {
        const int end = std::min(n_images, begin + 256);
        v.middleCols(begin, end - begin) =
            modes[mi].models->encoder.forward(test.images.middleCols(begin, end - begin));
      }
      encoded.push_back(std::move(v));
    }
    encoder_of_mode[mi] = idx;
  }

  for (int trial = 0; trial < trials; ++trial) {
    for (int img = 0; img < n_images; ++img) {
      const std::uint64_t rec_seed = derive_seed(
          cfg.master_seed, {stream_tag("eval"), (std::uint64_t)trial, (std::uint64_t)img});
      const ChannelSet ch = sample_channels(cfg, derive_seed(rec_seed, {stream_tag("chan")}));
      const LinkState link = build_link(ch, cfg);
      snr_lin_sum += link.bob_snr_linear;
      const NoiseSpec noise{cfg.noise_power_bob, cfg.noise_power_eve, rec_seed};
      const int label = test.labels[img];

      for (std::size_t mi = 0; mi < modes.size(); ++mi) {
        ModelBundle& bundle = *modes[mi].models;
        const CVector s = reshape_to_complex(to_double(encoded[encoder_of_mode[mi]].col(img)));
        const TransmissionRecord rec =
            transmit_signal(s, label, link, modes[mi].mode, bundle, noise, opt);
        if (rec.y_l.y == label) rates[mi].bob_rate += 1.0;
        if (rec.y_e.y == label) rates[mi].eve_rate += 1.0;
        const CVector det = link.eve_direct * rec.s + rec.r_a;
        eve_power_lin[mi] += det.squaredNorm() / det.size();
        rates[mi].records += 1;
      }
    }
  }

  const double mean_snr_db = 10.0 * std::log10(snr_lin_sum / (trials * n_images));
  for (std::size_t mi = 0; mi < modes.size(); ++mi) {
    rates[mi].bob_rate /= rates[mi].records;
    rates[mi].eve_rate /= rates[mi].records;
    rates[mi].mean_bob_snr_db = mean_snr_db;
    rates[mi].mean_eve_power_db = 10.0 * std::log10(eve_power_lin[mi] / rates[mi].records);
  }
  return rates;
}

void export_records_csv(const std::string& path, const nn::Dataset& test, const SystemConfig& cfg,
                        const std::vector<ModeEval>& modes, int n_images) {
  std::ofstream out(path);
  if (!out) throw PipelineError("cannot open for writing: " + path);
  const int k2 = 2 * cfg.symbol_count;
  const int src = cfg.source_dims();
  out << "image_id,mode,label,y_l,y_e";
  for (int i = 0; i < src; ++i) out << ",orig_" << i;
  for (int i = 0; i < k2; ++i) out << ",s_" << i;
  for (int i = 0; i < k2; ++i) out << ",va_" << i;
  for (int i = 0; i < k2; ++i) out << ",ve_" << i;
  out << '\n';
  out.precision(7);

  const int n = std::min(n_images, test.count());
  const TransmitOptions opt{cfg.fgsm_predicted_label};
  for (int img = 0; img < n; ++img) {
    const std::uint64_t rec_seed =
        derive_seed(cfg.master_seed, {stream_tag("records"), (std::uint64_t)img});
    const ChannelSet ch = sample_channels(cfg, derive_seed(rec_seed, {stream_tag("chan")}));
    const LinkState link = build_link(ch, cfg);
    const NoiseSpec noise{cfg.noise_power_bob, cfg.noise_power_eve, rec_seed};
    const nn::ImageSample x = test.sample(img);
    for (const ModeEval& me : modes) {
      const TransmissionRecord rec = transmit(x, link, me.mode, *me.models, noise, opt);
      out << img << ',' << mode_name(me.mode) << ',' << rec.label << ',' << rec.y_l.y << ','
          << rec.y_e.y;
      for (int i = 0; i < src; ++i) out << ',' << x.pixels(i);
      const Eigen::VectorXd s_real = reshape_to_real(rec.s);
      const Eigen::VectorXd va = reshape_to_real(rec.r_a * safe_inv(link.eve_direct));
      for (int i = 0; i < k2; ++i) out << ',' << s_real(i) + 0.0;  // +0.0 folds negative zero
      for (int i = 0; i < k2; ++i) out << ',' << va(i) + 0.0;
      for (int i = 0; i < k2; ++i) out << ',' << rec.v_e(i) + 0.0f;
      out << '\n';
    }
  }
}

}  // namespace starsem
