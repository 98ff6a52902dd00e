#include "starsem/config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <vector>

#include "starsem/rng.hpp"

namespace starsem {

double distance(const Position& a, const Position& b) {
  return std::hypot(a.x - b.x, a.y - b.y);
}

namespace {

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void check(bool ok, const std::string& what) {
  if (!ok) throw ConfigError("config invariant violated: " + what);
}

struct Line {
  std::string key;
  std::vector<std::string> values;
};

}  // namespace

SystemConfig validate(SystemConfig cfg) {
  const struct {
    const char* name;
    Position p;
  } nodes[] = {{"bs", cfg.bs_position},
               {"ris", cfg.ris_position},
               {"eve", cfg.eve_position},
               {"bob", cfg.bob_position}};
  for (int i = 0; i < 4; ++i)
    for (int j = i + 1; j < 4; ++j)
      check(distance(nodes[i].p, nodes[j].p) > 0.0,
            std::string("zero distance between ") + nodes[i].name + " and " + nodes[j].name);

  check(cfg.num_bs_antennas >= 1, "num_bs_antennas >= 1");
  check(cfg.num_transmit_elements >= 1, "num_transmit_elements >= 1 (Bob's link must exist)");
  check(cfg.num_reflect_elements >= 0, "num_reflect_elements >= 0");
  check(cfg.bs_power > 0.0, "bs_power > 0");
  check(cfg.noise_power_bob > 0.0, "noise_power_bob > 0");
  check(cfg.noise_power_eve > 0.0, "noise_power_eve > 0");
  check(cfg.pathloss_exponent > 0.0, "pathloss_exponent > 0");
  check(cfg.pathloss_ref_dist > 0.0, "pathloss_ref_dist > 0");
  check(cfg.image_dims[0] >= 1 && cfg.image_dims[1] >= 1 && cfg.image_dims[2] >= 1,
        "image_dims positive");
  check(cfg.symbol_count >= 1, "symbol_count >= 1");
  check(cfg.compressed_rate > 0.0 && cfg.compressed_rate <= 1.0, "compressed_rate in (0, 1]");
  check(2 * cfg.symbol_count ==
            static_cast<int>(std::llround(cfg.compressed_rate * cfg.source_dims())),
        "2*symbol_count == round(compressed_rate * c*h*w)");
  check(cfg.set_lambda >= 0.0, "set_lambda >= 0");
  check(cfg.set_epsilon > 0.0 && cfg.set_epsilon < 1.0, "set_epsilon in (0, 1)");
  check(cfg.batch_size >= 1, "batch_size >= 1");
  check(cfg.learning_rate > 0.0, "learning_rate > 0");
  check(cfg.pretrain_epochs >= 0 && cfg.finetune_epochs >= 0 && cfg.eve_epochs >= 0 &&
            cfg.set_epochs >= 0,
        "epoch counts >= 0");
  check(cfg.train_subset >= 1 && cfg.test_subset >= 1, "dataset subsets >= 1");
  check(cfg.eval_trials >= 1, "eval_trials >= 1");
  return cfg;
}

SystemConfig with_symbol_count(SystemConfig cfg, int k) {
  cfg.symbol_count = k;
  cfg.compressed_rate = 2.0 * k / cfg.source_dims();
  return cfg;
}

SystemConfig with_rate(SystemConfig cfg, double nominal_rate) {
  const int k = std::max<int>(1, static_cast<int>(std::llround(nominal_rate * cfg.source_dims() / 2.0)));
  return with_symbol_count(cfg, k);
}

std::string serialize_config(const SystemConfig& c) {
  std::ostringstream os;
  os << "bs_position = " << fmt_double(c.bs_position.x) << ' ' << fmt_double(c.bs_position.y) << '\n'
     << "ris_position = " << fmt_double(c.ris_position.x) << ' ' << fmt_double(c.ris_position.y) << '\n'
     << "eve_position = " << fmt_double(c.eve_position.x) << ' ' << fmt_double(c.eve_position.y) << '\n'
     << "bob_position = " << fmt_double(c.bob_position.x) << ' ' << fmt_double(c.bob_position.y) << '\n'
     << "num_bs_antennas = " << c.num_bs_antennas << '\n'
     << "num_transmit_elements = " << c.num_transmit_elements << '\n'
     << "num_reflect_elements = " << c.num_reflect_elements << '\n'
     << "bs_power = " << fmt_double(c.bs_power) << '\n'
     << "noise_power_bob = " << fmt_double(c.noise_power_bob) << '\n'
     << "noise_power_eve = " << fmt_double(c.noise_power_eve) << '\n'
     << "pathloss_ref_db = " << fmt_double(c.pathloss_ref_db) << '\n'
     << "pathloss_ref_dist = " << fmt_double(c.pathloss_ref_dist) << '\n'
     << "pathloss_exponent = " << fmt_double(c.pathloss_exponent) << '\n'
     << "symbol_count = " << c.symbol_count << '\n'
     << "image_dims = " << c.image_dims[0] << ' ' << c.image_dims[1] << ' ' << c.image_dims[2] << '\n'
     << "compressed_rate = " << fmt_double(c.compressed_rate) << '\n'
     << "master_seed = " << c.master_seed << '\n'
     << "set_lambda = " << fmt_double(c.set_lambda) << '\n'
     << "set_epsilon = " << fmt_double(c.set_epsilon) << '\n'
     << "batch_size = " << c.batch_size << '\n'
     << "learning_rate = " << fmt_double(c.learning_rate) << '\n'
     << "pretrain_epochs = " << c.pretrain_epochs << '\n'
     << "finetune_epochs = " << c.finetune_epochs << '\n'
     << "eve_epochs = " << c.eve_epochs << '\n'
     << "set_epochs = " << c.set_epochs << '\n'
     << "train_subset = " << c.train_subset << '\n'
     << "test_subset = " << c.test_subset << '\n'
     << "eval_trials = " << c.eval_trials << '\n'
     << "fgsm_predicted_label = " << (c.fgsm_predicted_label ? 1 : 0) << '\n'
     << "data_dir = " << c.data_dir << '\n';
  return os.str();
}

void save_config(const SystemConfig& cfg, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot open config file for writing: " + path);
  out << serialize_config(cfg);
}

namespace {

double parse_double(const std::string& s, const std::string& key, int line_no,
                    const std::string& origin) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    throw ConfigError(origin + ":" + std::to_string(line_no) + ": cannot parse value '" + s +
                      "' for key '" + key + "' as a number");
  }
}

long long parse_int(const std::string& s, const std::string& key, int line_no,
                    const std::string& origin) {
  try {
    std::size_t pos = 0;
    const long long v = std::stoll(s, &pos);
    if (pos != s.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    throw ConfigError(origin + ":" + std::to_string(line_no) + ": cannot parse value '" + s +
                      "' for key '" + key + "' as an integer");
  }
}

}  // namespace

SystemConfig parse_config(const std::string& text, const std::string& origin) {
  SystemConfig cfg;
  bool k_set = false, rate_set = false;

  std::istringstream in(text);
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    if (const auto hash = raw.find('#'); hash != std::string::npos) raw.erase(hash);
    std::string token;
    std::vector<std::string> tokens;
    std::istringstream ls(raw);
    while (ls >> token)
      if (token != "=") tokens.push_back(token);
    if (tokens.empty()) continue;
    // allow "key = v" and "key=v"
    std::string key = tokens[0];
    if (const auto eq = key.find('='); eq != std::string::npos) {
      const std::string rest = key.substr(eq + 1);
      key.erase(eq);
      if (!rest.empty()) tokens.insert(tokens.begin() + 1, rest);
    }
    std::vector<std::string> vals(tokens.begin() + 1, tokens.end());

    auto want = [&](std::size_t n) {
      if (vals.size() != n)
        throw ConfigError(origin + ":" + std::to_string(line_no) + ": key '" + key + "' expects " +
                          std::to_string(n) + " value(s), got " + std::to_string(vals.size()));
    };
    auto num = [&](int i) { return parse_double(vals[i], key, line_no, origin); };
    auto integer = [&](int i) { return parse_int(vals[i], key, line_no, origin); };

    if (key == "bs_position") { want(2); cfg.bs_position = {num(0), num(1)}; }
    else if (key == "ris_position") { want(2); cfg.ris_position = {num(0), num(1)}; }
    else if (key == "eve_position") { want(2); cfg.eve_position = {num(0), num(1)}; }
    else if (key == "bob_position") { want(2); cfg.bob_position = {num(0), num(1)}; }
    else if (key == "ris_x") { want(1); cfg.ris_position.x = num(0); }
    else if (key == "num_bs_antennas") { want(1); cfg.num_bs_antennas = static_cast<int>(integer(0)); }
    else if (key == "num_transmit_elements") { want(1); cfg.num_transmit_elements = static_cast<int>(integer(0)); }
    else if (key == "num_reflect_elements") { want(1); cfg.num_reflect_elements = static_cast<int>(integer(0)); }
    else if (key == "bs_power") { want(1); cfg.bs_power = num(0); }
    else if (key == "noise_power_bob") { want(1); cfg.noise_power_bob = num(0); }
    else if (key == "noise_power_eve") { want(1); cfg.noise_power_eve = num(0); }
    else if (key == "pathloss_ref_db") { want(1); cfg.pathloss_ref_db = num(0); }
    else if (key == "pathloss_ref_dist") { want(1); cfg.pathloss_ref_dist = num(0); }
    else if (key == "pathloss_exponent") { want(1); cfg.pathloss_exponent = num(0); }
    else if (key == "symbol_count") { want(1); cfg.symbol_count = static_cast<int>(integer(0)); k_set = true; }
    else if (key == "image_dims") { want(3); cfg.image_dims = {static_cast<int>(integer(0)), static_cast<int>(integer(1)), static_cast<int>(integer(2))}; }
    else if (key == "compressed_rate") { want(1); cfg.compressed_rate = num(0); rate_set = true; }
    else if (key == "master_seed") { want(1); cfg.master_seed = static_cast<std::uint64_t>(integer(0)); }
    else if (key == "set_lambda") { want(1); cfg.set_lambda = num(0); }
    else if (key == "set_epsilon") { want(1); cfg.set_epsilon = num(0); }
    else if (key == "batch_size") { want(1); cfg.batch_size = static_cast<int>(integer(0)); }
    else if (key == "learning_rate") { want(1); cfg.learning_rate = num(0); }
    else if (key == "pretrain_epochs") { want(1); cfg.pretrain_epochs = static_cast<int>(integer(0)); }
    else if (key == "finetune_epochs") { want(1); cfg.finetune_epochs = static_cast<int>(integer(0)); }
    else if (key == "eve_epochs") { want(1); cfg.eve_epochs = static_cast<int>(integer(0)); }
    else if (key == "set_epochs") { want(1); cfg.set_epochs = static_cast<int>(integer(0)); }
    else if (key == "train_subset") { want(1); cfg.train_subset = static_cast<int>(integer(0)); }
    else if (key == "test_subset") { want(1); cfg.test_subset = static_cast<int>(integer(0)); }
    else if (key == "eval_trials") { want(1); cfg.eval_trials = static_cast<int>(integer(0)); }
    else if (key == "fgsm_predicted_label") { want(1); cfg.fgsm_predicted_label = integer(0) != 0; }
    else if (key == "data_dir") { want(1); cfg.data_dir = vals[0]; }
    else {
      throw ConfigError(origin + ":" + std::to_string(line_no) + ": unknown key '" + key + "'");
    }
  }

  // Reconcile the K <-> rate coupling for partially-specified files.
  if (k_set && !rate_set) {
    cfg = with_symbol_count(cfg, cfg.symbol_count);
  } else if (rate_set && !k_set) {
    cfg = with_rate(cfg, cfg.compressed_rate);
  } else if (!k_set && !rate_set) {
    cfg = with_symbol_count(cfg, cfg.symbol_count);  // adjust rate if image_dims changed
  }
  return validate(cfg);
}

SystemConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path);
}

namespace {
std::string hex_hash(const std::string& text) {
  std::uint64_t h = stream_tag(text);
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}
}  // namespace

std::string config_hash(const SystemConfig& cfg) { return hex_hash(serialize_config(cfg)); }

std::string train_hash(const SystemConfig& c) {
  std::ostringstream os;
  os << c.bs_position.x << ' ' << c.bs_position.y << ';' << c.ris_position.x << ' '
     << c.ris_position.y << ';' << c.eve_position.x << ' ' << c.eve_position.y << ';'
     << c.bob_position.x << ' ' << c.bob_position.y << ';' << c.num_bs_antennas << ';'
     << c.num_transmit_elements << ';' << fmt_double(c.bs_power) << ';'
     << fmt_double(c.noise_power_bob) << ';' << fmt_double(c.noise_power_eve) << ';'
     << fmt_double(c.pathloss_ref_db) << ';' << fmt_double(c.pathloss_ref_dist) << ';'
     << fmt_double(c.pathloss_exponent) << ';' << c.symbol_count << ';' << c.image_dims[0] << ' '
     << c.image_dims[1] << ' ' << c.image_dims[2] << ';' << fmt_double(c.set_lambda) << ';'
     << fmt_double(c.set_epsilon) << ';' << c.batch_size << ';' << fmt_double(c.learning_rate)
     << ';' << c.pretrain_epochs << ';' << c.finetune_epochs << ';' << c.eve_epochs << ';'
     << c.set_epochs << ';' << c.train_subset << ';' << c.master_seed;
  return hex_hash(os.str());
}

}  // namespace starsem
