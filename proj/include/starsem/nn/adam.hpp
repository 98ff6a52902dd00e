#pragma once

#include "starsem/nn/layers.hpp"

namespace starsem::nn {

// Adam with the standard moment constants (beta1 0.9, beta2 0.999, eps 1e-8).
template <class S>
class Adam {
 public:
  explicit Adam(double lr) : lr_(lr) {}

  void step(const std::vector<Param<S>>& params) {
    if (m_.empty()) {
      for (const auto& p : params) {
        m_.push_back(Mat<S>::Zero(p.value->rows(), p.value->cols()));
        v_.push_back(Mat<S>::Zero(p.value->rows(), p.value->cols()));
      }
    }
    if (m_.size() != params.size()) throw NnError("Adam: parameter list changed size");
    ++t_;
    const S c1 = static_cast<S>(1.0 - std::pow(0.9, t_));
    const S c2 = static_cast<S>(1.0 - std::pow(0.999, t_));
    for (std::size_t i = 0; i < params.size(); ++i) {
      const Mat<S>& g = *params[i].grad;
      m_[i] = S(0.9) * m_[i] + S(0.1) * g;
      v_[i] = S(0.999) * v_[i] + S(0.001) * g.cwiseProduct(g);
      params[i].value->array() -=
          static_cast<S>(lr_) * (m_[i].array() / c1) /
          ((v_[i].array() / c2).sqrt() + S(1e-8));
    }
  }

 private:
  double lr_;
  long t_ = 0;
  std::vector<Mat<S>> m_, v_;
};

}  // namespace starsem::nn
