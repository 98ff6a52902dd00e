#include "starsem/sweep.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "starsem/nn/checkpoint.hpp"

namespace starsem {

const char* sweep_variable_name(SweepVariable v) {
  switch (v) {
    case SweepVariable::ReflectElements: return "reflect_elements";
    case SweepVariable::RisX: return "ris_x";
    case SweepVariable::CompressedRate: return "compressed_rate";
  }
  return "?";
}

SweepVariable sweep_variable_from_name(const std::string& name) {
  if (name == "reflect_elements") return SweepVariable::ReflectElements;
  if (name == "ris_x") return SweepVariable::RisX;
  if (name == "compressed_rate") return SweepVariable::CompressedRate;
  throw SweepError("unknown sweep variable: " + name +
                   " (expected reflect_elements, ris_x or compressed_rate)");
}

void BundleStore::put(int symbol_count, bool set_variant, std::unique_ptr<ModelBundle> bundle,
                      std::string hash, BundleMetrics metrics) {
  const auto key = std::make_pair(symbol_count, set_variant);
  bundles_[key] = std::move(bundle);
  hashes_[key] = std::move(hash);
  metrics_[key] = metrics;
}

bool BundleStore::has(int symbol_count, bool set_variant) const {
  return bundles_.count({symbol_count, set_variant}) > 0;
}

ModelBundle& BundleStore::get(int symbol_count, bool set_variant,
                              const std::string& expected_hash) {
  const auto key = std::make_pair(symbol_count, set_variant);
  const auto it = bundles_.find(key);
  if (it == bundles_.end())
    throw SweepError(std::string("no ") + (set_variant ? "SET " : "") + "checkpoint bundle for K=" +
                     std::to_string(symbol_count) + " (train one with `starsem train`)");
  if (hashes_[key] != expected_hash)
    throw SweepError("checkpoint bundle for K=" + std::to_string(symbol_count) +
                     " was trained under an incompatible config (hash " + hashes_[key] +
                     ", expected " + expected_hash + ")");
  return *it->second;
}

std::unique_ptr<ModelBundle> train_bundle(const nn::Dataset& train, const SystemConfig& cfg,
                                          const nn::LeNetClassifier<float>& pretrained,
                                          BundleMetrics* metrics) {
  nn::TrainMetrics joint_m, eve_m;
  nn::JointModels joint = nn::train_joint(train, cfg, pretrained, &joint_m);
  nn::JscDecoder<float> eve = nn::train_eve(train, cfg, joint.encoder, &eve_m);
  auto bundle = std::make_unique<ModelBundle>(
      ModelBundle{std::move(joint.encoder), std::move(joint.bob), std::move(eve)});
  if (metrics) {
    metrics->finetune_loss = joint_m.final_loss;
    metrics->eve_loss = eve_m.final_loss;
    metrics->mean_link_snr_db = joint_m.mean_link_snr_db;
    metrics->bob_clean_accuracy =
        nn::clean_accuracy(bundle->encoder, bundle->bob_decoder, train);
    metrics->eve_clean_accuracy =
        nn::clean_accuracy(bundle->encoder, bundle->eve_decoder, train);
  }
  return bundle;
}

std::unique_ptr<ModelBundle> train_set_bundle(const nn::Dataset& train, const SystemConfig& cfg,
                                              const nn::LeNetClassifier<float>& pretrained,
                                              nn::JscDecoder<float>& eve_frozen,
                                              BundleMetrics* metrics) {
  nn::TrainMetrics joint_m, eve_m;
  nn::JointModels joint = nn::set_train(train, cfg, pretrained, eve_frozen, &joint_m);
  // Worst-case eavesdropper adapts to whatever encoder is deployed.
  nn::JscDecoder<float> eve = nn::train_eve(train, cfg, joint.encoder, &eve_m);
  auto bundle = std::make_unique<ModelBundle>(
      ModelBundle{std::move(joint.encoder), std::move(joint.bob), std::move(eve)});
  if (metrics) {
    metrics->finetune_loss = joint_m.final_loss;
    metrics->eve_loss = eve_m.final_loss;
    metrics->mean_link_snr_db = joint_m.mean_link_snr_db;
    metrics->bob_clean_accuracy =
        nn::clean_accuracy(bundle->encoder, bundle->bob_decoder, train);
    metrics->eve_clean_accuracy =
        nn::clean_accuracy(bundle->encoder, bundle->eve_decoder, train);
  }
  return bundle;
}

SystemConfig apply_sweep_value(SystemConfig base, SweepVariable var, double value) {
  switch (var) {
    case SweepVariable::ReflectElements:
      base.num_reflect_elements = static_cast<int>(std::llround(value));
      break;
    case SweepVariable::RisX:
      base.ris_position.x = value;
      break;
    case SweepVariable::CompressedRate:
      base = with_rate(base, value);
      break;
  }
  return validate(base);
}

std::vector<SweepRow> run_sweep(const nn::Dataset& test, const SystemConfig& base,
                                const SweepSpec& spec, BundleStore& store) {
  if (spec.values.empty()) throw SweepError("sweep needs at least one value");
  if (spec.modes.empty()) throw SweepError("sweep needs at least one protection mode");
  if (spec.trials < 1) throw SweepError("sweep needs trials >= 1");

  std::vector<SweepRow> rows;
  for (double value : spec.values) {
    SystemConfig cfg_point = apply_sweep_value(base, spec.variable, value);
    const std::string point_hash = config_hash(cfg_point);
    // Checkpoints are keyed to the training config: only the compressed-rate
    // variable retrains per point; reflect-element and surface-location
    // sweeps evaluate the base-trained models under varied geometry.
    const std::string expected = train_hash(
        spec.variable == SweepVariable::CompressedRate ? cfg_point : base);

    std::vector<ModeEval> evals;
    for (ProtectionMode mode : spec.modes)
      evals.push_back({mode, &store.get(cfg_point.symbol_count, mode == ProtectionMode::Set,
                                        expected)});

    for (int trial = 0; trial < spec.trials; ++trial) {
      SystemConfig cfg_trial = cfg_point;
      cfg_trial.eval_trials = 1;
      cfg_trial.master_seed = derive_seed(
          base.master_seed, {stream_tag("sweep"), stream_tag(sweep_variable_name(spec.variable)),
                             std::bit_cast<std::uint64_t>(value), (std::uint64_t)trial});
      const std::vector<EvalRates> rates = evaluate(test, cfg_trial, evals);
      for (const EvalRates& r : rates) {
        SweepRow row;
        row.variable = sweep_variable_name(spec.variable);
        row.value = value;
        row.mode = mode_name(r.mode);
        row.trial = trial;
        row.bob_rate = r.bob_rate;
        row.eve_rate = r.eve_rate;
        row.bob_snr_db = r.mean_bob_snr_db;
        row.eve_power_db = r.mean_eve_power_db;
        row.seed = cfg_trial.master_seed;
        row.config_hash = point_hash;
        rows.push_back(row);
      }
    }
  }
  return rows;
}

std::string sweep_csv_string(const std::vector<SweepRow>& rows) {
  std::string out = "variable,value,mode,trial,bob_rate,eve_rate,bob_snr_db,eve_power_db,seed,config_hash\n";
  char buf[256];
  for (const SweepRow& r : rows) {
    std::snprintf(buf, sizeof(buf), "%s,%.10g,%s,%d,%.8f,%.8f,%.6f,%.6f,%llu,%s\n",
                  r.variable.c_str(), r.value, r.mode.c_str(), r.trial, r.bob_rate, r.eve_rate,
                  r.bob_snr_db, r.eve_power_db, static_cast<unsigned long long>(r.seed),
                  r.config_hash.c_str());
    out += buf;
  }
  return out;
}

void write_sweep_csv(const std::vector<SweepRow>& rows, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw SweepError("cannot open for writing: " + path);
  out << sweep_csv_string(rows);
}

void write_sweep_svg(const std::vector<SweepRow>& rows, const std::string& path) {
  if (rows.empty()) throw SweepError("nothing to plot");
  // Average Eve's rate over trials per (mode, value).
  std::map<std::string, std::map<double, std::pair<double, int>>> series;
  for (const SweepRow& r : rows) {
    auto& cell = series[r.mode][r.value];
    cell.first += r.eve_rate;
    cell.second += 1;
  }
  double xmin = rows.front().value, xmax = rows.front().value;
  for (const SweepRow& r : rows) {
    xmin = std::min(xmin, r.value);
    xmax = std::max(xmax, r.value);
  }
  if (xmax == xmin) xmax = xmin + 1.0;

  const int width = 640, height = 420, ml = 60, mr = 150, mt = 30, mb = 50;
  const double pw = width - ml - mr, ph = height - mt - mb;
  auto sx = [&](double v) { return ml + (v - xmin) / (xmax - xmin) * pw; };
  auto sy = [&](double r) { return mt + (1.0 - r) * ph; };
  const char* colors[] = {"#d62728", "#1f77b4", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

  std::ofstream out(path);
  if (!out) throw SweepError("cannot open for writing: " + path);
  out << "<svg xmlns='http://www.w3.org/2000/svg' width='" << width << "' height='" << height
      << "'>\n<rect width='100%' height='100%' fill='white'/>\n";
  // axes
  out << "<line x1='" << ml << "' y1='" << mt << "' x2='" << ml << "' y2='" << (mt + ph)
      << "' stroke='black'/>\n";
  out << "<line x1='" << ml << "' y1='" << (mt + ph) << "' x2='" << (ml + pw) << "' y2='"
      << (mt + ph) << "' stroke='black'/>\n";
  for (int i = 0; i <= 5; ++i) {
    const double r = i / 5.0;
    out << "<text x='" << (ml - 8) << "' y='" << (sy(r) + 4)
        << "' font-size='11' text-anchor='end'>" << r << "</text>\n";
    out << "<line x1='" << (ml - 4) << "' y1='" << sy(r) << "' x2='" << ml << "' y2='" << sy(r)
        << "' stroke='black'/>\n";
  }
  std::vector<double> xs;
  for (const auto& [v, cell] : series.begin()->second) xs.push_back(v);
  for (double v : xs) {
    char label[32];
    std::snprintf(label, sizeof(label), "%g", v);
    out << "<text x='" << sx(v) << "' y='" << (mt + ph + 18)
        << "' font-size='11' text-anchor='middle'>" << label << "</text>\n";
  }
  out << "<text x='" << (ml + pw / 2) << "' y='" << (height - 12)
      << "' font-size='12' text-anchor='middle'>" << rows.front().variable << "</text>\n";
  out << "<text x='16' y='" << (mt + ph / 2)
      << "' font-size='12' text-anchor='middle' transform='rotate(-90 16 " << (mt + ph / 2)
      << ")'>task success rate at Eve</text>\n";

  int ci = 0;
  for (const auto& [mode, points] : series) {
    std::string poly;
    for (const auto& [v, cell] : points) {
      char pt[64];
      std::snprintf(pt, sizeof(pt), "%.1f,%.1f ", sx(v), sy(cell.first / cell.second));
      poly += pt;
    }
    const char* color = colors[ci % 6];
    out << "<polyline fill='none' stroke='" << color << "' stroke-width='2' points='" << poly
        << "'/>\n";
    out << "<text x='" << (ml + pw + 12) << "' y='" << (mt + 16 + 18 * ci) << "' font-size='12' fill='"
        << color << "'>" << mode << "</text>\n";
    ++ci;
  }
  out << "</svg>\n";
}

namespace {

std::string bundle_key_name(int k, bool set_variant) {
  return "K" + std::to_string(k) + (set_variant ? "_set" : "");
}

std::vector<nn::Param<float>> bundle_params(ModelBundle& b) {
  std::vector<nn::Param<float>> all;
  for (auto& p : b.encoder.params()) all.push_back({"encoder." + p.name, p.value, p.grad});
  for (auto& p : b.bob_decoder.params()) all.push_back({"bob." + p.name, p.value, p.grad});
  for (auto& p : b.eve_decoder.params()) all.push_back({"eve." + p.name, p.value, p.grad});
  return all;
}

}  // namespace

void save_bundle_dir(const std::string& dir, const SystemConfig& base_cfg, BundleStore& store) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  nlohmann::json manifest;
  manifest["master_seed"] = base_cfg.master_seed;
  manifest["config_hash"] = config_hash(base_cfg);
  manifest["bundles"] = nlohmann::json::object();
  for (const auto& [key, hash] : store.hashes()) {
    const auto [k, set_variant] = key;
    const std::string name = bundle_key_name(k, set_variant);
    const std::string file = name + ".ckpt";
    ModelBundle& b = store.get(k, set_variant, hash);
    nn::save_checkpoint(dir + "/" + file, bundle_params(b));
    nlohmann::json entry;
    entry["symbol_count"] = k;
    entry["set_variant"] = set_variant;
    entry["train_hash"] = hash;
    entry["file"] = file;
    const BundleMetrics& m = store.metrics().at(key);
    entry["metrics"] = {{"finetune_loss", m.finetune_loss},
                        {"eve_loss", m.eve_loss},
                        {"mean_link_snr_db", m.mean_link_snr_db},
                        {"bob_clean_accuracy", m.bob_clean_accuracy},
                        {"eve_clean_accuracy", m.eve_clean_accuracy}};
    manifest["bundles"][name] = entry;
  }
  std::ofstream out(dir + "/manifest.json");
  if (!out) throw SweepError("cannot write manifest in " + dir);
  out << manifest.dump(2) << '\n';
}

BundleStore load_bundle_dir(const std::string& dir) {
  std::ifstream in(dir + "/manifest.json");
  if (!in) throw SweepError("no manifest.json in " + dir);
  nlohmann::json manifest;
  in >> manifest;
  BundleStore store;
  for (const auto& [name, entry] : manifest["bundles"].items()) {
    const int k = entry["symbol_count"].get<int>();
    const bool set_variant = entry["set_variant"].get<bool>();
    auto bundle = std::make_unique<ModelBundle>(ModelBundle{
        nn::JscEncoder<float>(k), nn::JscDecoder<float>(k), nn::JscDecoder<float>(k)});
    nn::load_into(dir + "/" + entry["file"].get<std::string>(), bundle_params(*bundle));
    BundleMetrics m;
    if (entry.contains("metrics")) {
      const auto& jm = entry["metrics"];
      m.finetune_loss = jm.value("finetune_loss", 0.0);
      m.eve_loss = jm.value("eve_loss", 0.0);
      m.mean_link_snr_db = jm.value("mean_link_snr_db", 0.0);
      m.bob_clean_accuracy = jm.value("bob_clean_accuracy", 0.0);
      m.eve_clean_accuracy = jm.value("eve_clean_accuracy", 0.0);
    }
    store.put(k, set_variant, std::move(bundle), entry["train_hash"].get<std::string>(), m);
  }
  return store;
}

}  // namespace starsem
