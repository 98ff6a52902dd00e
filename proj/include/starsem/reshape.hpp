#pragma once

#include <Eigen/Dense>
#include <stdexcept>

#include "starsem/channel.hpp"

namespace starsem {

// g_F: complex length-K vector <-> real length-2K vector, interleaved as
// (Re r_1, Im r_1, ..., Re r_K, Im r_K). Exact bijection.
inline Eigen::VectorXd reshape_to_real(const CVector& r) {
  Eigen::VectorXd v(2 * r.size());
  for (Eigen::Index k = 0; k < r.size(); ++k) {
    v(2 * k) = r(k).real();
    v(2 * k + 1) = r(k).imag();
  }
  return v;
}

inline CVector reshape_to_complex(const Eigen::VectorXd& v) {
  if (v.size() % 2 != 0)
    throw std::invalid_argument("reshape_to_complex: odd-length vector");
  CVector r(v.size() / 2);
  for (Eigen::Index k = 0; k < r.size(); ++k) r(k) = {v(2 * k), v(2 * k + 1)};
  return r;
}

inline Eigen::VectorXf to_float(const Eigen::VectorXd& v) { return v.cast<float>(); }
inline Eigen::VectorXd to_double(const Eigen::VectorXf& v) { return v.cast<double>(); }

}  // namespace starsem
