#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>

#include "starsem/sweep.hpp"

using namespace starsem;

namespace {

SystemConfig tiny_cfg() {
  SystemConfig cfg;
  cfg = with_symbol_count(cfg, 8);
  cfg.num_transmit_elements = 6;
  cfg.num_reflect_elements = 4;
  cfg.num_bs_antennas = 2;
  cfg.test_subset = 12;
  cfg.eval_trials = 1;
  return validate(cfg);
}

std::unique_ptr<ModelBundle> random_bundle(int k, std::uint64_t seed) {
  auto b = std::make_unique<ModelBundle>(
      ModelBundle{nn::JscEncoder<float>(k), nn::JscDecoder<float>(k), nn::JscDecoder<float>(k)});
  Rng rng(seed);
  b->encoder.init(rng);
  b->bob_decoder.init(rng);
  b->eve_decoder.init(rng);
  return b;
}

nn::Dataset synthetic_dataset(int dims, int n, std::uint64_t seed) {
  nn::Dataset d;
  d.images.resize(dims, n);
  Rng rng(seed);
  for (int i = 0; i < n; ++i) {
    for (int p = 0; p < dims; ++p) d.images(p, i) = static_cast<float>(rng.uniform());
    d.labels.push_back(rng.uniform_int(10));
  }
  return d;
}

}  // namespace

TEST_CASE("apply_sweep_value touches exactly the declared knob") {
  const SystemConfig base = tiny_cfg();
  SystemConfig a = apply_sweep_value(base, SweepVariable::ReflectElements, 64);
  CHECK(a.num_reflect_elements == 64);
  CHECK(a.symbol_count == base.symbol_count);

  SystemConfig b = apply_sweep_value(base, SweepVariable::RisX, 10);
  CHECK(b.ris_x() == doctest::Approx(10.0));
  CHECK(b.ris_position.y == doctest::Approx(base.ris_position.y));

  SystemConfig c = apply_sweep_value(base, SweepVariable::CompressedRate, 0.16);
  CHECK(c.symbol_count == 63);  // round(0.16*784/2)
  CHECK(c.compressed_rate == doctest::Approx(126.0 / 784.0));
}

TEST_CASE("sweep emits one row per value, mode and trial in declared order") {
  const SystemConfig base = tiny_cfg();
  BundleStore store;
  store.put(base.symbol_count, false, random_bundle(base.symbol_count, 1), train_hash(base));

  SweepSpec spec;
  spec.variable = SweepVariable::ReflectElements;
  spec.values = {2, 4};
  spec.modes = {ProtectionMode::None, ProtectionMode::Tlp};
  spec.trials = 2;

  const nn::Dataset test = synthetic_dataset(base.source_dims(), 12, 5);
  const auto rows = run_sweep(test, base, spec, store);
  REQUIRE(rows.size() == 8);
  CHECK(rows[0].value == 2);
  CHECK(rows[0].mode == "none");
  CHECK(rows[1].mode == "tlp");
  CHECK(rows[2].trial == 1);
  CHECK(rows[4].value == 4);
  for (const auto& r : rows) {
    CHECK(r.variable == "reflect_elements");
    CHECK(r.bob_rate >= 0.0);
    CHECK(r.bob_rate <= 1.0);
    CHECK(!r.config_hash.empty());
  }
  // same (value, trial) rows share the paired channel/noise seed
  CHECK(rows[0].seed == rows[1].seed);
  CHECK(rows[0].seed != rows[2].seed);
}

TEST_CASE("sweep reruns reproduce the CSV bit for bit") {
  const SystemConfig base = tiny_cfg();
  BundleStore store;
  store.put(base.symbol_count, false, random_bundle(base.symbol_count, 2), train_hash(base));
  SweepSpec spec;
  spec.variable = SweepVariable::RisX;
  spec.values = {10, 30};
  spec.modes = {ProtectionMode::Snrlp};
  spec.trials = 2;
  const nn::Dataset test = synthetic_dataset(base.source_dims(), 12, 6);
  const std::string a = sweep_csv_string(run_sweep(test, base, spec, store));
  const std::string b = sweep_csv_string(run_sweep(test, base, spec, store));
  CHECK(a == b);
  CHECK(a.substr(0, a.find('\n')) ==
        "variable,value,mode,trial,bob_rate,eve_rate,bob_snr_db,eve_power_db,seed,config_hash");
}

TEST_CASE("incompatible checkpoints are refused") {
  const SystemConfig base = tiny_cfg();
  BundleStore store;
  store.put(base.symbol_count, false, random_bundle(base.symbol_count, 3), "deadbeefdeadbeef");
  SweepSpec spec;
  spec.variable = SweepVariable::ReflectElements;
  spec.values = {2};
  spec.modes = {ProtectionMode::None};
  const nn::Dataset test = synthetic_dataset(base.source_dims(), 4, 7);
  CHECK_THROWS_WITH_AS(run_sweep(test, base, spec, store), doctest::Contains("incompatible"),
                       SweepError);
}

TEST_CASE("set mode requires the SET bundle") {
  const SystemConfig base = tiny_cfg();
  BundleStore store;
  store.put(base.symbol_count, false, random_bundle(base.symbol_count, 4), train_hash(base));
  SweepSpec spec;
  spec.variable = SweepVariable::ReflectElements;
  spec.values = {2};
  spec.modes = {ProtectionMode::Set};
  const nn::Dataset test = synthetic_dataset(base.source_dims(), 4, 8);
  CHECK_THROWS_WITH_AS(run_sweep(test, base, spec, store), doctest::Contains("SET"), SweepError);
}

TEST_CASE("a compressed-rate sweep resolves per-rate bundles") {
  const SystemConfig base = tiny_cfg();
  BundleStore store;
  const SystemConfig snapped = with_rate(base, 0.16);
  store.put(snapped.symbol_count, false, random_bundle(snapped.symbol_count, 5),
            train_hash(snapped));
  SweepSpec spec;
  spec.variable = SweepVariable::CompressedRate;
  spec.values = {0.16};
  spec.modes = {ProtectionMode::None};
  const nn::Dataset test = synthetic_dataset(base.source_dims(), 6, 9);
  const auto rows = run_sweep(test, base, spec, store);
  CHECK(rows.size() == 1);
}

TEST_CASE("bundle directories round-trip through the manifest") {
  namespace fs = std::filesystem;
  const std::string dir = (fs::temp_directory_path() / "starsem_bundles_test").string();
  fs::remove_all(dir);

  const SystemConfig base = tiny_cfg();
  BundleStore store;
  BundleMetrics metrics;
  metrics.bob_clean_accuracy = 0.5;
  store.put(base.symbol_count, false, random_bundle(base.symbol_count, 6), train_hash(base),
            metrics);
  store.put(base.symbol_count, true, random_bundle(base.symbol_count, 7), train_hash(base));
  save_bundle_dir(dir, base, store);

  BundleStore loaded = load_bundle_dir(dir);
  CHECK(loaded.has(base.symbol_count, false));
  CHECK(loaded.has(base.symbol_count, true));
  ModelBundle& orig = store.get(base.symbol_count, false, train_hash(base));
  ModelBundle& back = loaded.get(base.symbol_count, false, train_hash(base));
  CHECK(back.encoder.head.W == orig.encoder.head.W);
  CHECK(back.eve_decoder.fc2.W == orig.eve_decoder.fc2.W);
  CHECK(loaded.metrics().at({base.symbol_count, false}).bob_clean_accuracy == 0.5);
  fs::remove_all(dir);
}

TEST_CASE("svg output contains one polyline per mode") {
  namespace fs = std::filesystem;
  const SystemConfig base = tiny_cfg();
  BundleStore store;
  store.put(base.symbol_count, false, random_bundle(base.symbol_count, 8), train_hash(base));
  SweepSpec spec;
  spec.variable = SweepVariable::ReflectElements;
  spec.values = {2, 4};
  spec.modes = {ProtectionMode::None, ProtectionMode::TlpRandom};
  const nn::Dataset test = synthetic_dataset(base.source_dims(), 6, 10);
  const auto rows = run_sweep(test, base, spec, store);
  const std::string path = (fs::temp_directory_path() / "starsem_sweep_test.svg").string();
  write_sweep_svg(rows, path);
  std::ifstream in(path);
  std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  CHECK(content.find("<svg") != std::string::npos);
  CHECK(std::count(content.begin(), content.end(), '\n') > 5);
  CHECK(content.find("tlp_random") != std::string::npos);
  size_t polylines = 0, pos = 0;
  while ((pos = content.find("<polyline", pos)) != std::string::npos) {
    ++polylines;
    pos += 9;
  }
  CHECK(polylines == 2);
  fs::remove(path);
}
