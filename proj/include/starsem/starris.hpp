#pragma once

#include <Eigen/Dense>

#include "starsem/channel.hpp"

namespace starsem {

struct SurfaceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Unit-modulus transmission coefficients, q[n] = e^{j phi_n}.
struct TransmissionConfig {
  CVector q;
  static TransmissionConfig from_phases(const Eigen::VectorXd& phases);
  static TransmissionConfig flat(int n);  // all phases zero
};

// Per-symbol reflection coefficients plus the on/off mask. Inactive elements
// contribute exactly zero to any cascade.
struct ReflectionConfig {
  CVector q;
  Eigen::Array<bool, Eigen::Dynamic, 1> active;
  static ReflectionConfig all_active_phases(const Eigen::VectorXd& phases);
};

enum class Side { Transmit, Reflect };

// a[n] = conj(h[n]) * (H * w_p)[n]: the per-element cascade BS -> element ->
// receiver under beamformer w_p. The diagonal action is applied directly.
struct CascadedTerms {
  CVector a;
  Side side = Side::Transmit;
};

CascadedTerms cascaded_terms(const CVector& h, const CMatrix& H, const CVector& w_p, Side side);

// Sum of e^{j phi_n} * a[n] over active elements. The phase convention is
// fixed so phi_n adds to arg(a[n]); only alignment/anti-alignment matters.
Complex effective_coefficient(const TransmissionConfig& q, const CascadedTerms& terms);
Complex effective_coefficient(const ReflectionConfig& q, const CascadedTerms& terms);

}  // namespace starsem
