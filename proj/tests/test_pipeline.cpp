#include <doctest.h>

#include <fstream>
#include <sstream>

#include "starsem/pipeline.hpp"
#include "starsem/reshape.hpp"

using namespace starsem;

namespace {

SystemConfig tiny_cfg() {
  SystemConfig cfg;
  cfg = with_symbol_count(cfg, 16);
  cfg.num_transmit_elements = 8;
  cfg.num_reflect_elements = 6;
  cfg.num_bs_antennas = 2;
  cfg.test_subset = 40;
  cfg.eval_trials = 1;
  return validate(cfg);
}

ModelBundle random_bundle(const SystemConfig& cfg, std::uint64_t seed) {
  ModelBundle b{nn::JscEncoder<float>(cfg.symbol_count), nn::JscDecoder<float>(cfg.symbol_count),
                nn::JscDecoder<float>(cfg.symbol_count)};
  Rng rng(seed);
  b.encoder.init(rng);
  b.bob_decoder.init(rng);
  b.eve_decoder.init(rng);
  return b;
}

nn::Dataset synthetic_dataset(const SystemConfig& cfg, int n, std::uint64_t seed) {
  nn::Dataset d;
  d.images.resize(cfg.source_dims(), n);
  Rng rng(seed);
  for (int i = 0; i < n; ++i) {
    for (int p = 0; p < cfg.source_dims(); ++p)
      d.images(p, i) = static_cast<float>(rng.uniform());
    d.labels.push_back(rng.uniform_int(10));
  }
  return d;
}

}  // namespace

TEST_CASE("build_link is reproducible and caches consistent scalars") {
  const SystemConfig cfg = tiny_cfg();
  const ChannelSet ch = sample_channels(cfg, 100);
  const LinkState a = build_link(ch, cfg);
  const LinkState b = build_link(ch, cfg);
  CHECK(a.bob_effective == b.bob_effective);
  CHECK(a.eve_direct == b.eve_direct);

  // after convergence the Bob coefficient magnitude equals the co-phased sum
  const CascadedTerms t = cascaded_terms(ch.h_il, ch.h_bt, a.w_p.w, Side::Transmit);
  double mag_sum = 0.0;
  for (int n = 0; n < t.a.size(); ++n) mag_sum += std::abs(t.a(n));
  CHECK(std::abs(a.bob_effective) == doctest::Approx(mag_sum).epsilon(1e-9));
  CHECK(std::norm(a.bob_effective) / cfg.noise_power_bob ==
        doctest::Approx(a.bob_snr_linear).epsilon(1e-9));
}

TEST_CASE("N_r = 0 leaves the Eve cascade empty but the link intact") {
  SystemConfig cfg = tiny_cfg();
  cfg.num_reflect_elements = 0;
  const LinkState link = build_link(sample_channels(cfg, 5), cfg);
  CHECK(link.eve_terms.a.size() == 0);
  CHECK(std::abs(link.eve_direct) > 0.0);

  ModelBundle models = random_bundle(cfg, 1);
  const nn::ImageSample x{Eigen::VectorXf::Constant(784, 0.5f), 3};
  const NoiseSpec noise{cfg.noise_power_bob, cfg.noise_power_eve, 2024};
  for (ProtectionMode m : {ProtectionMode::Tlp, ProtectionMode::Snrlp, ProtectionMode::TlpRandom}) {
    const TransmissionRecord rec = transmit(x, link, m, models, noise);
    CHECK(rec.r_a.cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("zero-noise transmission reproduces the noiseless prediction") {
  SystemConfig cfg = tiny_cfg();
  const LinkState link = build_link(sample_channels(cfg, 6), cfg);
  ModelBundle models = random_bundle(cfg, 2);
  const nn::ImageSample x{Eigen::VectorXf::Constant(784, 0.25f), 1};
  const NoiseSpec no_noise{1e-300, 1e-300, 7};
  const TransmissionRecord rec = transmit(x, link, ProtectionMode::None, models, no_noise);

  const Eigen::VectorXf v = models.encoder.forward(x.pixels).col(0);
  const int direct = nn::argmax_class<float>(models.bob_decoder.forward(v).col(0));
  CHECK(rec.y_l.y == direct);
  CHECK(rec.y_e.y == nn::argmax_class<float>(models.eve_decoder.forward(v).col(0)));
}

TEST_CASE("bob's received vector is bit-identical across every protection mode") {
  const SystemConfig cfg = tiny_cfg();
  const LinkState link = build_link(sample_channels(cfg, 8), cfg);
  ModelBundle models = random_bundle(cfg, 3);
  const NoiseSpec noise{cfg.noise_power_bob, cfg.noise_power_eve, 99};

  nn::Dataset batch = synthetic_dataset(cfg, 10, 55);
  for (int i = 0; i < batch.count(); ++i) {
    const nn::ImageSample x = batch.sample(i);
    const TransmissionRecord base = transmit(x, link, ProtectionMode::None, models, noise);
    for (ProtectionMode m : {ProtectionMode::Tlp, ProtectionMode::Snrlp, ProtectionMode::TlpRandom,
                             ProtectionMode::Set}) {
      const TransmissionRecord rec = transmit(x, link, m, models, noise);
      CHECK(rec.r_l == base.r_l);
      CHECK(rec.v_l == base.v_l);
      CHECK(rec.y_l.y == base.y_l.y);
    }
  }
}

TEST_CASE("r_a is exactly zero under None and Set") {
  const SystemConfig cfg = tiny_cfg();
  const LinkState link = build_link(sample_channels(cfg, 9), cfg);
  ModelBundle models = random_bundle(cfg, 4);
  const NoiseSpec noise{cfg.noise_power_bob, cfg.noise_power_eve, 123};
  const nn::ImageSample x{Eigen::VectorXf::Constant(784, 0.7f), 0};
  for (ProtectionMode m : {ProtectionMode::None, ProtectionMode::Set}) {
    const TransmissionRecord rec = transmit(x, link, m, models, noise);
    CHECK(rec.r_a.cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("energy bookkeeping: E|r_E|^2 matches |d|^2 + sigma^2") {
  SystemConfig cfg = tiny_cfg();
  const LinkState link = build_link(sample_channels(cfg, 11), cfg);
  // make the noise visible next to the signal so the test is informative
  const double sigma2 = std::norm(link.eve_direct) / 4.0;
  ModelBundle models = random_bundle(cfg, 5);
  nn::Dataset batch = synthetic_dataset(cfg, 700, 77);

  double sum = 0.0;
  long count = 0;
  for (int i = 0; i < batch.count(); ++i) {
    const NoiseSpec noise{cfg.noise_power_bob, sigma2, derive_seed(1000, {(std::uint64_t)i})};
    const TransmissionRecord rec =
        transmit(batch.sample(i), link, ProtectionMode::None, models, noise);
    sum += rec.r_e.squaredNorm();
    count += rec.r_e.size();
  }
  const double expected = std::norm(link.eve_direct) + sigma2;
  CHECK(count >= 10000);
  CHECK(sum / count == doctest::Approx(expected).epsilon(0.02));
}

TEST_CASE("snrlp never raises the deterministic eve power, symbol by symbol") {
  const SystemConfig cfg = tiny_cfg();
  ModelBundle models = random_bundle(cfg, 6);
  nn::Dataset batch = synthetic_dataset(cfg, 8, 60);
  for (int i = 0; i < batch.count(); ++i) {
    const LinkState link =
        build_link(sample_channels(cfg, derive_seed(31, {(std::uint64_t)i})), cfg);
    const NoiseSpec noise{cfg.noise_power_bob, cfg.noise_power_eve,
                          derive_seed(32, {(std::uint64_t)i})};
    const TransmissionRecord none =
        transmit(batch.sample(i), link, ProtectionMode::None, models, noise);
    const TransmissionRecord prot =
        transmit(batch.sample(i), link, ProtectionMode::Snrlp, models, noise);
    for (int k = 0; k < prot.s.size(); ++k) {
      const double det_none = std::abs(link.eve_direct * none.s(k));
      const double det_prot = std::abs(link.eve_direct * prot.s(k) + prot.r_a(k));
      CHECK(det_prot <= det_none + 1e-12);
    }
  }
}

TEST_CASE("tlp interference aligns with the FGSM quadrants after eve equalization") {
  const SystemConfig cfg = tiny_cfg();
  const LinkState link = build_link(sample_channels(cfg, 13), cfg);
  ModelBundle models = random_bundle(cfg, 7);
  const NoiseSpec noise{cfg.noise_power_bob, cfg.noise_power_eve, 5};
  const nn::ImageSample x{Eigen::VectorXf::Constant(784, 0.4f), 2};
  const TransmissionRecord rec = transmit(x, link, ProtectionMode::Tlp, models, noise);

  const Eigen::VectorXf v_clean = to_float(reshape_to_real(rec.s));
  const FgsmDirection dir = fgsm_direction(models.eve_decoder, v_clean, x.label);
  const CVector equalized = rec.r_a / link.eve_direct;
  for (int k = 0; k < equalized.size(); ++k) {
    double dphi = std::arg(equalized(k)) - dir.target_phases(k);
    while (dphi > kPi) dphi -= kTwoPi;
    while (dphi < -kPi) dphi += kTwoPi;
    CHECK(std::abs(dphi) < 1e-9);
  }
}

TEST_CASE("untrained decoders sit at chance level") {
  SystemConfig cfg = tiny_cfg();
  cfg.test_subset = 1000;
  nn::Dataset data = synthetic_dataset(cfg, 1000, 42);
  ModelBundle models = random_bundle(cfg, 8);
  const std::vector<EvalRates> rates = evaluate(data, cfg, {{ProtectionMode::None, &models}});
  CHECK(rates[0].records == 1000);
  CHECK(rates[0].eve_rate == doctest::Approx(0.1).epsilon(0.35));
  CHECK(rates[0].bob_rate == doctest::Approx(0.1).epsilon(0.35));
}

TEST_CASE("evaluate is deterministic in the master seed") {
  SystemConfig cfg = tiny_cfg();
  cfg.test_subset = 25;
  nn::Dataset data = synthetic_dataset(cfg, 25, 43);
  ModelBundle models = random_bundle(cfg, 9);
  const auto a = evaluate(data, cfg, {{ProtectionMode::Tlp, &models}});
  const auto b = evaluate(data, cfg, {{ProtectionMode::Tlp, &models}});
  CHECK(a[0].bob_rate == b[0].bob_rate);
  CHECK(a[0].eve_rate == b[0].eve_rate);
  CHECK(a[0].mean_eve_power_db == b[0].mean_eve_power_db);

  SystemConfig other = cfg;
  other.master_seed = 999;
  const auto c = evaluate(data, other, {{ProtectionMode::Tlp, &models}});
  CHECK(c[0].mean_eve_power_db != a[0].mean_eve_power_db);
}

TEST_CASE("record export writes zero attack columns for unprotected modes") {
  SystemConfig cfg = tiny_cfg();
  nn::Dataset data = synthetic_dataset(cfg, 3, 44);
  ModelBundle models = random_bundle(cfg, 10);
  const std::string path = "records_test.csv";
  export_records_csv(path, data, cfg, {{ProtectionMode::None, &models}}, 2);

  std::ifstream in(path);
  std::string header, row;
  std::getline(in, header);
  CHECK(header.substr(0, 30) == "image_id,mode,label,y_l,y_e,or");
  std::getline(in, row);
  // count fields
  std::stringstream ss(row);
  std::string field;
  std::vector<std::string> fields;
  while (std::getline(ss, field, ',')) fields.push_back(field);
  CHECK(fields.size() == 5u + 784u + 3u * 32u);
  CHECK(fields[1] == "none");
  // attack stream (va) spans [5+784+32, 5+784+64)
  for (std::size_t i = 5 + 784 + 32; i < 5 + 784 + 64; ++i) CHECK(fields[i] == "0");
  std::remove(path.c_str());
}
