#include "starsem/privacy.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "starsem/reshape.hpp"

namespace starsem {

const char* mode_name(ProtectionMode m) {
  switch (m) {
    case ProtectionMode::None: return "none";
    case ProtectionMode::Tlp: return "tlp";
    case ProtectionMode::Snrlp: return "snrlp";
    case ProtectionMode::TlpRandom: return "tlp_random";
    case ProtectionMode::Set: return "set";
  }
  return "?";
}

ProtectionMode mode_from_name(const std::string& name) {
  if (name == "none") return ProtectionMode::None;
  if (name == "tlp") return ProtectionMode::Tlp;
  if (name == "snrlp") return ProtectionMode::Snrlp;
  if (name == "tlp_random" || name == "tlp-random") return ProtectionMode::TlpRandom;
  if (name == "set") return ProtectionMode::Set;
  throw std::invalid_argument("unknown protection mode: " + name);
}

namespace {
double wrap_phase(double p) {
  p = std::fmod(p, kTwoPi);
  return p < 0.0 ? p + kTwoPi : p;
}
}  // namespace

FgsmDirection fgsm_from_gradient(const Eigen::VectorXd& grad) {
  FgsmDirection d;
  d.eta = grad.unaryExpr([](double g) { return g < 0.0 ? -1.0 : 1.0; });
  d.gamma = reshape_to_complex(d.eta);
  d.target_phases.resize(d.gamma.size());
  for (Eigen::Index k = 0; k < d.gamma.size(); ++k)
    d.target_phases(k) = wrap_phase(std::arg(d.gamma(k)));
  return d;
}

FgsmDirection fgsm_direction(nn::JscDecoder<float>& eve_decoder, const Eigen::VectorXf& v_clean,
                             int label) {
  const Eigen::VectorXf g = nn::input_gradient(eve_decoder, v_clean, label);
  return fgsm_from_gradient(to_double(g));
}

ReflectionConfig tlp_rcv(const CascadedTerms& eve_terms, Complex symbol, double target_phase) {
  if (std::abs(symbol) == 0.0) throw SurfaceError("tlp_rcv: zero symbol has no phase");
  ReflectionConfig rcv;
  const double base = target_phase - std::arg(symbol);
  rcv.q = eve_terms.a.unaryExpr(
      [base](Complex a) { return std::polar(1.0, wrap_phase(base - std::arg(a))); });
  rcv.active = Eigen::Array<bool, Eigen::Dynamic, 1>::Constant(eve_terms.a.size(), true);
  return rcv;
}

namespace {

// Closest-subset-sum to |d| by Gray-code enumeration; ties keep the first
// (lowest-code) subset encountered.
std::vector<bool> enumerate_best_subset(double target, const std::vector<double>& mags) {
  const int n = static_cast<int>(mags.size());
  std::vector<bool> current(n, false), best(n, false);
  double sum = 0.0;
  double best_residual = target;  // empty set
  for (std::uint64_t g = 1; g < (1ULL << n); ++g) {
    const int bit = std::countr_zero(g);  // Gray-code flip position
    current[bit] = !current[bit];
    sum += current[bit] ? mags[bit] : -mags[bit];
    const double residual = std::abs(target - sum);
    if (residual < best_residual) {
      best_residual = residual;
      best = current;
    }
  }
  return best;
}

std::vector<bool> greedy_subset(double target, const std::vector<double>& mags) {
  const int n = static_cast<int>(mags.size());
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) { return mags[a] > mags[b]; });
  std::vector<bool> chosen(n, false);
  double sum = 0.0;
  int next = -1;
  for (int i = 0; i < n; ++i) {
    if (sum + mags[order[i]] <= target) {
      chosen[order[i]] = true;
      sum += mags[order[i]];
    } else if (next < 0) {
      next = order[i];
    }
  }
  // One look-ahead: overshooting with the largest skipped element may still
  // shrink the residual.
  if (next >= 0 && std::abs(sum + mags[next] - target) < std::abs(target - sum)) chosen[next] = true;
  return chosen;
}

}  // namespace

ReflectionConfig snrlp_rcv(Complex direct, const CascadedTerms& eve_terms) {
  const int n = static_cast<int>(eve_terms.a.size());
  const double target = std::abs(direct);
  std::vector<double> mags(n);
  for (int i = 0; i < n; ++i) mags[i] = std::abs(eve_terms.a(i));

  const std::vector<bool> active =
      n <= 20 ? enumerate_best_subset(target, mags) : greedy_subset(target, mags);

  ReflectionConfig rcv;
  rcv.q = CVector::Ones(n);
  rcv.active.resize(n);
  const double anti = std::arg(direct) + kPi;
  for (int i = 0; i < n; ++i) {
    rcv.active(i) = active[i];
    if (active[i]) rcv.q(i) = std::polar(1.0, wrap_phase(anti - std::arg(eve_terms.a(i))));
  }
  return rcv;
}

ReflectionConfig random_rcv(int n_reflect, Rng& rng) {
  ReflectionConfig rcv;
  rcv.q.resize(n_reflect);
  for (int i = 0; i < n_reflect; ++i) rcv.q(i) = std::polar(1.0, rng.uniform(0.0, kTwoPi));
  rcv.active = Eigen::Array<bool, Eigen::Dynamic, 1>::Constant(n_reflect, true);
  return rcv;
}

bool set_leakage_indicator(const Eigen::VectorXf& eve_logits, int label, double epsilon) {
  const nn::Vec<float> p = nn::softmax<float>(eve_logits);
  return p(label) > epsilon;
}

double set_loss(const nn::Mat<float>& eve_logits, const nn::Mat<float>& bob_logits,
                const std::vector<int>& labels, const SetLossConfig& cfg) {
  if (eve_logits.cols() != bob_logits.cols() ||
      static_cast<std::size_t>(eve_logits.cols()) != labels.size())
    throw nn::NnError("set_loss: batch shape mismatch");
  const nn::Vec<float> l_bob = nn::per_sample_cross_entropy<float>(bob_logits, labels);
  const nn::Vec<float> l_eve = nn::per_sample_cross_entropy<float>(eve_logits, labels);
  double total = 0.0;
  for (Eigen::Index k = 0; k < eve_logits.cols(); ++k) {
    const bool leaking =
        set_leakage_indicator(eve_logits.col(k), labels[static_cast<std::size_t>(k)], cfg.epsilon);
    const double l_eve_prime = leaking ? -static_cast<double>(l_eve(k)) : 0.0;
    total += l_bob(k) - cfg.lambda * l_eve_prime;
  }
  return total / static_cast<double>(eve_logits.cols());
}

}  // namespace starsem
