#pragma once

#include "starsem/nn/models.hpp"
#include "starsem/rng.hpp"
#include "starsem/starris.hpp"

namespace starsem {

enum class ProtectionMode { None, Tlp, Snrlp, TlpRandom, Set };

const char* mode_name(ProtectionMode m);
ProtectionMode mode_from_name(const std::string& name);

// One-step gradient-sign direction in the reshaped real domain plus its
// complex image and per-symbol target phases (always on the four diagonals,
// since both components are +-1).
struct FgsmDirection {
  Eigen::VectorXd eta;            // 2K entries in {-1, +1}; sign(0) = +1
  CVector gamma;                  // K, gamma_k = eta_{2k} + j eta_{2k+1}
  Eigen::VectorXd target_phases;  // arg(gamma) in [0, 2pi)
};

// Gradient of Eve's loss at her (noiseless, equalized) received vector.
FgsmDirection fgsm_direction(nn::JscDecoder<float>& eve_decoder, const Eigen::VectorXf& v_clean,
                             int label);
FgsmDirection fgsm_from_gradient(const Eigen::VectorXd& grad);

// Reflection phases for one transmitted symbol so that the aggregated
// interference satisfies arg(r_A) = target_phase and |r_A| = |s| * sum|a_n|.
// Throws on a zero symbol (its phase is undefined).
ReflectionConfig tlp_rcv(const CascadedTerms& eve_terms, Complex symbol, double target_phase);

// Anti-phases the active elements against the direct term and picks the
// active set minimizing | |d| - sum_active |a_n| |: exhaustive enumeration up
// to 20 elements, greedy (sorted descending, then one look-ahead) above.
// The empty set is always a candidate, so the residual never exceeds |d|.
ReflectionConfig snrlp_rcv(Complex direct, const CascadedTerms& eve_terms);

// Uniform i.i.d. phases in [0, 2pi), all elements active.
ReflectionConfig random_rcv(int n_reflect, Rng& rng);

struct SetLossConfig {
  double lambda = 1.0;
  double epsilon = 0.8;
};

// Eve's softmax confidence at the true label exceeding epsilon marks a
// leaking sample: l'_E = -l_E then, else 0; total = mean(l_L - lambda*l'_E).
bool set_leakage_indicator(const Eigen::VectorXf& eve_logits, int label, double epsilon);
double set_loss(const nn::Mat<float>& eve_logits, const nn::Mat<float>& bob_logits,
                const std::vector<int>& labels, const SetLossConfig& cfg);

}  // namespace starsem
