// starsem: STAR-RIS-assisted semantic communication link simulator with
// surface-side privacy protection. Subcommands: fetch-data, train, sweep,
// visualize, oracle-check.

#include "starsem/dataio.hpp"
#include "starsem/sweep.hpp"
#include "support/oracles.hpp"

// keep network headers after Eigen: resolv.h leaks a `res` macro
#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>
#include <openssl/evp.h>

#include <CLI11.hpp>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>

namespace fs = std::filesystem;
using namespace starsem;
using nlohmann::json;

namespace {

struct CliError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string md5_hex(const std::string& bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  EVP_DigestInit_ex(ctx, EVP_md5(), nullptr);
  EVP_DigestUpdate(ctx, bytes.data(), bytes.size());
  EVP_DigestFinal_ex(ctx, digest, &len);
  EVP_MD_CTX_free(ctx);
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[digest[i] >> 4];
    out += hex[digest[i] & 0xf];
  }
  return out;
}

// Canonical archive digests, as published with the dataset.
const std::pair<const char*, const char*> kMnistFiles[] = {
    {"train-images-idx3-ubyte.gz", "f68b3c2dcbeaaa9fbdd348bbdeb94873"},
    {"train-labels-idx1-ubyte.gz", "d53e105ee54ea40749a09fcbcd1e9432"},
    {"t10k-images-idx3-ubyte.gz", "9fb629c4189551a2d022fa330f9573f3"},
    {"t10k-labels-idx1-ubyte.gz", "ec29112dd5afa0611ce80d1b7f02629c"},
};

int cmd_fetch_data(const std::string& out_dir, const std::string& base_url) {
  fs::create_directories(out_dir);
  // split "https://host/path/"
  const auto scheme_end = base_url.find("://");
  if (scheme_end == std::string::npos) throw CliError("base url must start with http(s)://");
  const auto host_start = scheme_end + 3;
  const auto path_start = base_url.find('/', host_start);
  const std::string origin = base_url.substr(0, path_start);
  const std::string base_path = path_start == std::string::npos ? "/" : base_url.substr(path_start);

  for (const auto& [name, md5] : kMnistFiles) {
    const std::string dest = out_dir + "/" + name;
    if (fs::exists(dest)) {
      std::ifstream in(dest, std::ios::binary);
      std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
      if (md5_hex(bytes) == md5) {
        std::cout << name << ": present, checksum ok\n";
        continue;
      }
      std::cout << name << ": present but corrupt, re-downloading\n";
    }
    httplib::Client client(origin);
    client.set_follow_location(true);
    client.set_connection_timeout(20);
    client.set_read_timeout(60);
    auto res = client.Get(base_path + name);
    if (!res || res->status != 200)
      throw CliError(std::string("download failed for ") + name + " from " + base_url +
                     (res ? " (status " + std::to_string(res->status) + ")" : " (no response)"));
    if (md5_hex(res->body) != md5)
      throw CliError(std::string("checksum mismatch for ") + name + ": got " +
                     md5_hex(res->body) + ", expected " + md5);
    std::ofstream out(dest, std::ios::binary);
    out << res->body;
    std::cout << name << ": downloaded and verified\n";
  }
  return 0;
}

SystemConfig load_cfg(const std::string& config_path, std::uint64_t seed_override, bool seed_set,
                      const std::string& data_override) {
  SystemConfig cfg = config_path.empty() ? validate(SystemConfig{}) : load_config(config_path);
  if (seed_set) cfg.master_seed = seed_override;
  if (!data_override.empty()) cfg.data_dir = data_override;
  return validate(cfg);
}

int cmd_train(const SystemConfig& base, const std::string& out_dir, bool with_set,
              const std::vector<double>& extra_rates) {
  const nn::Dataset train = load_mnist(base.data_dir, "train", base.train_subset);
  std::cout << "training on " << train.count() << " images, seed " << base.master_seed << "\n";

  nn::TrainMetrics pre_metrics;
  const auto t0 = std::chrono::steady_clock::now();
  nn::LeNetClassifier<float> lenet = nn::pretrain_lenet(train, base, &pre_metrics);
  std::cout << "pretrained lenet: loss " << pre_metrics.final_loss << ", train accuracy "
            << nn::classifier_accuracy(lenet, train) << "\n";

  BundleStore store;
  std::vector<SystemConfig> cfgs{base};
  for (double rate : extra_rates) {
    const SystemConfig snapped = with_rate(base, rate);
    if (snapped.symbol_count != base.symbol_count) cfgs.push_back(snapped);
  }
  for (const SystemConfig& cfg : cfgs) {
    BundleMetrics metrics;
    auto bundle = train_bundle(train, cfg, lenet, &metrics);
    std::cout << "bundle K=" << cfg.symbol_count << ": link snr " << metrics.mean_link_snr_db
              << " dB, clean accuracy bob " << metrics.bob_clean_accuracy << " eve "
              << metrics.eve_clean_accuracy << "\n";
    if (with_set && cfg.symbol_count == base.symbol_count) {
      BundleMetrics set_metrics;
      auto set_bundle = train_set_bundle(train, cfg, lenet, bundle->eve_decoder, &set_metrics);
      std::cout << "SET bundle K=" << cfg.symbol_count << ": clean accuracy bob "
                << set_metrics.bob_clean_accuracy << " eve " << set_metrics.eve_clean_accuracy
                << "\n";
      store.put(cfg.symbol_count, true, std::move(set_bundle), train_hash(cfg), set_metrics);
    }
    store.put(cfg.symbol_count, false, std::move(bundle), train_hash(cfg), metrics);
  }
  save_bundle_dir(out_dir, base, store);
  const auto secs =
      std::chrono::duration_cast<std::chrono::seconds>(std::chrono::steady_clock::now() - t0);
  std::cout << "checkpoints written to " << out_dir << " (" << secs.count() << " s)\n";
  return 0;
}

SweepSpec parse_sweep_arg(const std::string& arg, const std::vector<std::string>& mode_names,
                          int trials) {
  const auto eq = arg.find('=');
  if (eq == std::string::npos)
    throw CliError("--sweep expects VAR=v1,v2,... (e.g. reflect_elements=8,16,32,64)");
  SweepSpec spec;
  spec.variable = sweep_variable_from_name(arg.substr(0, eq));
  std::stringstream vs(arg.substr(eq + 1));
  std::string tok;
  while (std::getline(vs, tok, ',')) spec.values.push_back(std::stod(tok));
  for (const std::string& m : mode_names) spec.modes.push_back(mode_from_name(m));
  spec.trials = trials;
  return spec;
}

int cmd_sweep(const SystemConfig& base, const std::string& checkpoints, const SweepSpec& spec,
              const std::string& out_csv, const std::string& out_svg) {
  BundleStore store = load_bundle_dir(checkpoints);
  const nn::Dataset test = load_mnist(base.data_dir, "t10k", base.test_subset);
  const auto rows = run_sweep(test, base, spec, store);
  write_sweep_csv(rows, out_csv);
  std::cout << rows.size() << " rows -> " << out_csv << "\n";
  if (!out_svg.empty()) {
    write_sweep_svg(rows, out_svg);
    std::cout << "plot -> " << out_svg << "\n";
  }
  return 0;
}

// ---- visualize ----

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string tok;
  while (std::getline(ss, tok, ',')) out.push_back(tok);
  return out;
}

unsigned char to_gray(double v) {
  const double c = std::min(1.0, std::max(0.0, v));  // clamp: saturate out-of-range
  return static_cast<unsigned char>(std::lround(c * 255.0));
}

int cmd_visualize(const std::string& records_csv, const std::string& out_pgm) {
  std::ifstream in(records_csv);
  if (!in) throw CliError("cannot open records file: " + records_csv);
  std::string header;
  if (!std::getline(in, header)) throw CliError("records file is empty");
  const auto cols = split_csv_line(header);
  int orig_begin = -1, va_begin = -1, ve_begin = -1, orig_n = 0, va_n = 0, ve_n = 0;
  for (int i = 0; i < static_cast<int>(cols.size()); ++i) {
    if (cols[i].rfind("orig_", 0) == 0) {
      if (orig_begin < 0) orig_begin = i;
      ++orig_n;
    } else if (cols[i].rfind("va_", 0) == 0) {
      if (va_begin < 0) va_begin = i;
      ++va_n;
    } else if (cols[i].rfind("ve_", 0) == 0) {
      if (ve_begin < 0) ve_begin = i;
      ++ve_n;
    }
  }
  if (orig_n == 0 || va_n == 0 || ve_n == 0)
    throw CliError("records file lacks orig_/va_/ve_ streams");
  if (va_n != orig_n || ve_n != orig_n)
    throw CliError("visualization requires compressed rate 1 (feature streams of length " +
                   std::to_string(va_n) + " vs " + std::to_string(orig_n) + " source pixels)");
  const int side = static_cast<int>(std::lround(std::sqrt(orig_n)));
  if (side * side != orig_n) throw CliError("source stream is not a square image");

  std::vector<std::array<std::vector<double>, 3>> rows;
  std::vector<std::string> captions;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split_csv_line(line);
    std::array<std::vector<double>, 3> tiles;
    for (int t = 0; t < 3; ++t) tiles[t].resize(orig_n);
    for (int i = 0; i < orig_n; ++i) {
      tiles[0][i] = std::stod(f[orig_begin + i]);
      tiles[1][i] = std::stod(f[va_begin + i]);
      tiles[2][i] = std::stod(f[ve_begin + i]);
    }
    rows.push_back(std::move(tiles));
    captions.push_back(f[1]);
  }
  if (rows.empty()) throw CliError("no records to visualize");

  const int gap = 2;
  const int width = 3 * side + 2 * gap;
  const int height = static_cast<int>(rows.size()) * side + (static_cast<int>(rows.size()) - 1) * gap;
  std::vector<unsigned char> canvas(static_cast<std::size_t>(width) * height, 255);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const int y0 = static_cast<int>(r) * (side + gap);
    for (int t = 0; t < 3; ++t) {
      const int x0 = t * (side + gap);
      for (int y = 0; y < side; ++y)
        for (int x = 0; x < side; ++x)
          canvas[static_cast<std::size_t>(y0 + y) * width + x0 + x] =
              to_gray(rows[r][t][y * side + x]);
    }
  }
  std::ofstream out(out_pgm, std::ios::binary);
  if (!out) throw CliError("cannot open output image: " + out_pgm);
  out << "P5\n" << width << " " << height << "\n255\n";
  out.write(reinterpret_cast<const char*>(canvas.data()), static_cast<std::streamsize>(canvas.size()));
  std::cout << rows.size() << " records (original | attack | fused) -> " << out_pgm << "\n";
  return 0;
}

int cmd_export_records(const SystemConfig& base, const std::string& checkpoints,
                       const std::vector<std::string>& mode_names, int count,
                       const std::string& out_csv) {
  BundleStore store = load_bundle_dir(checkpoints);
  const nn::Dataset test = load_mnist(base.data_dir, "t10k", base.test_subset);
  std::vector<ModeEval> evals;
  const std::string expected = train_hash(base);
  for (const std::string& m : mode_names) {
    const ProtectionMode mode = mode_from_name(m);
    evals.push_back({mode, &store.get(base.symbol_count, mode == ProtectionMode::Set, expected)});
  }
  export_records_csv(out_csv, test, base, evals, count);
  std::cout << "records -> " << out_csv << "\n";
  return 0;
}

// ---- oracle-check ----

int cmd_oracle_check() {
  using clock = std::chrono::steady_clock;
  bool all_ok = true;
  auto report = [&](const char* name, bool ok, double detail, double secs) {
    std::cout << (ok ? "PASS  " : "FAIL  ") << name << " (worst " << detail << ", " << secs
              << " s)\n";
    all_ok = all_ok && ok;
  };

  {  // alternating optimizer vs joint grid search
    const auto t0 = clock::now();
    double worst = 1.0;
    for (int inst = 0; inst < 50; ++inst) {
      SystemConfig cfg;
      cfg.num_bs_antennas = 1 + inst % 2;
      cfg.num_transmit_elements = 1 + inst % 3;
      const ChannelSet ch = sample_channels(cfg, derive_seed(9000, {(std::uint64_t)inst}));
      const double got = alternate(ch, cfg).snr_linear;
      const double oracle = verify::grid_search_best_snr(ch, cfg, 200, 1.0, inst);
      worst = std::min(worst, got / oracle);
    }
    report("empowerment vs grid search (50 instances, ratio >= 0.99)", worst >= 0.99, worst,
           std::chrono::duration<double>(clock::now() - t0).count());
  }

  {  // snrlp vs subset enumeration
    const auto t0 = clock::now();
    double worst = 0.0;
    Rng rng(9100);
    for (int inst = 0; inst < 100; ++inst) {
      const int n = 1 + rng.uniform_int(16);
      CascadedTerms t;
      t.side = Side::Reflect;
      t.a.resize(n);
      std::vector<double> mags(n);
      for (int i = 0; i < n; ++i) {
        t.a(i) = rng.cgaussian(1.0);
        mags[i] = std::abs(t.a(i));
      }
      const Complex d = rng.cgaussian(4.0);
      const ReflectionConfig rcv = snrlp_rcv(d, t);
      const double residual = std::abs(d + effective_coefficient(rcv, t));
      worst = std::max(worst, std::abs(residual - verify::subset_enum_min_residual(std::abs(d), mags)));
    }
    report("snrlp vs subset enumeration (100 instances, |diff| <= 1e-12)", worst <= 1e-12, worst,
           std::chrono::duration<double>(clock::now() - t0).count());
  }

  {  // tlp aggregation algebra
    const auto t0 = clock::now();
    double worst = 0.0;
    Rng rng(9200);
    for (int inst = 0; inst < 1000; ++inst) {
      const int n = 1 + rng.uniform_int(32);
      CascadedTerms t;
      t.side = Side::Reflect;
      t.a.resize(n);
      double mag_sum = 0.0;
      for (int i = 0; i < n; ++i) {
        t.a(i) = rng.cgaussian(1.0);
        mag_sum += std::abs(t.a(i));
      }
      const Complex s = rng.cgaussian(1.0);
      const double target = rng.uniform(0.0, kTwoPi);
      const Complex r_a = effective_coefficient(tlp_rcv(t, s, target), t) * s;
      worst = std::max(worst, std::abs(std::abs(r_a) - mag_sum * std::abs(s)) /
                                  (mag_sum * std::abs(s)));
      double dphi = std::arg(r_a) - target;
      while (dphi > kPi) dphi -= kTwoPi;
      while (dphi < -kPi) dphi += kTwoPi;
      worst = std::max(worst, std::abs(dphi));
    }
    report("tlp aggregation identity (1000 triples, err <= 1e-9)", worst <= 1e-9, worst,
           std::chrono::duration<double>(clock::now() - t0).count());
  }

  {  // gradients vs central differences (double precision)
    const auto t0 = clock::now();
    Rng rng(9300);
    nn::JscDecoder<double> dec(16);
    dec.init(rng);
    nn::Mat<double> v(32, 2);
    for (int i = 0; i < v.size(); ++i) v(i / 2, i % 2) = rng.gaussian();
    const std::vector<int> labels{2, 9};
    auto loss = [&]() { return nn::cross_entropy<double>(dec.forward(v), labels, nullptr); };
    nn::Mat<double> dlogits;
    nn::cross_entropy<double>(dec.forward(v), labels, &dlogits);
    dec.backward(dlogits);
    double worst = 0.0;
    for (auto& p : dec.params())
      for (int c = 0; c < 30; ++c) {
        const Eigen::Index r = rng.uniform_int(static_cast<int>(p.value->rows()));
        const Eigen::Index cc = rng.uniform_int(static_cast<int>(p.value->cols()));
        const double an = (*p.grad)(r, cc);
        const double fd = verify::central_difference(loss, (*p.value)(r, cc), 1e-5);
        worst = std::max(worst, std::abs(fd - an) / std::max({1e-6, std::abs(fd), std::abs(an)}));
      }
    report("decoder gradients vs finite differences (err < 1e-4)", worst < 1e-4, worst,
           std::chrono::duration<double>(clock::now() - t0).count());
  }

  std::cout << (all_ok ? "all oracle suites passed\n" : "oracle suites FAILED\n");
  return all_ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"STAR-RIS semantic communication privacy simulator"};
  app.require_subcommand(1);

  std::string config_path, out_dir = "out", data_dir_override;
  std::uint64_t seed = 0;
  bool seed_set = false;
  app.add_option("--config", config_path, "config file (key = value lines)");
  auto* seed_opt = app.add_option("--seed", seed, "master seed override");
  app.add_option("--data", data_dir_override, "dataset directory override");

  auto* fetch = app.add_subcommand("fetch-data", "download and checksum-verify the dataset");
  std::string fetch_out = "data";
  std::string base_url = "https://ossci-datasets.s3.amazonaws.com/mnist/";
  fetch->add_option("--out", fetch_out, "destination directory");
  fetch->add_option("--base-url", base_url, "mirror base url");

  auto* train = app.add_subcommand("train", "train encoder/decoder checkpoints");
  bool with_set = false;
  std::vector<double> extra_rates;
  train->add_option("--out", out_dir, "checkpoint directory");
  train->add_flag("--set", with_set, "also train the SET baseline encoder");
  train->add_option("--rates", extra_rates, "extra compressed rates to train bundles for")
      ->delimiter(',');

  auto* sweep = app.add_subcommand("sweep", "run an experiment sweep to CSV (+SVG)");
  std::string checkpoints = "out", sweep_arg, out_csv = "sweep.csv", out_svg;
  std::vector<std::string> mode_names{"none", "tlp", "snrlp", "tlp_random"};
  int trials = 0, images = 0;
  sweep->add_option("--checkpoints", checkpoints, "checkpoint directory from `train`");
  sweep->add_option("--sweep", sweep_arg, "VAR=v1,v2,... (reflect_elements, ris_x, compressed_rate)")
      ->required();
  sweep->add_option("--modes", mode_names, "protection modes")->delimiter(',');
  sweep->add_option("--trials", trials, "channel trials per value (default: config eval_trials)");
  sweep->add_option("--images", images, "test images per trial (default: config test_subset)");
  sweep->add_option("--out", out_csv, "output CSV path");
  sweep->add_option("--svg", out_svg, "optional line-plot SVG path");

  auto* records = app.add_subcommand("records", "export per-image transmission records to CSV");
  std::string rec_checkpoints = "out", rec_out = "records.csv";
  std::vector<std::string> rec_modes{"none", "tlp", "snrlp", "tlp_random"};
  int rec_count = 8;
  records->add_option("--checkpoints", rec_checkpoints, "checkpoint directory");
  records->add_option("--modes", rec_modes, "protection modes")->delimiter(',');
  records->add_option("--count", rec_count, "number of test images");
  records->add_option("--out", rec_out, "output CSV path");

  auto* vis = app.add_subcommand("visualize", "render records CSV as an image grid (PGM)");
  std::string vis_records = "records.csv", vis_out = "grid.pgm";
  vis->add_option("--records", vis_records, "records CSV from `records`");
  vis->add_option("--out", vis_out, "output image (binary PGM)");

  auto* oracle = app.add_subcommand("oracle-check", "run the brute-force oracle suites");

  CLI11_PARSE(app, argc, argv);
  seed_set = seed_opt->count() > 0;

  try {
    if (*fetch) return cmd_fetch_data(fetch_out, base_url);
    if (*oracle) return cmd_oracle_check();

    SystemConfig cfg = load_cfg(config_path, seed, seed_set, data_dir_override);
    if (*train) return cmd_train(cfg, out_dir, with_set, extra_rates);
    if (*sweep) {
      if (trials > 0) cfg.eval_trials = trials;
      if (images > 0) cfg.test_subset = images;
      const SweepSpec spec = parse_sweep_arg(sweep_arg, mode_names, cfg.eval_trials);
      return cmd_sweep(cfg, checkpoints, spec, out_csv, out_svg);
    }
    if (*records) return cmd_export_records(cfg, rec_checkpoints, rec_modes, rec_count, rec_out);
    if (*vis) return cmd_visualize(vis_records, vis_out);
  } catch (const std::exception& e) {
    json err;
    err["error"] = e.what();
    std::cerr << err.dump() << "\n";
    return 1;
  }
  return 0;
}
