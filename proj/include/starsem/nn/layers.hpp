#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "starsem/rng.hpp"

namespace starsem::nn {

template <class S>
using Mat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;
template <class S>
using Vec = Eigen::Matrix<S, Eigen::Dynamic, 1>;

struct NnError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Named view of one trainable tensor and its gradient buffer.
template <class S>
struct Param {
  std::string name;
  Mat<S>* value;
  Mat<S>* grad;
};

// Uniform(-1/sqrt(fan_in), +1/sqrt(fan_in)) for weights and biases.
template <class S>
void init_uniform(Mat<S>& m, int fan_in, Rng& rng) {
  const double k = 1.0 / std::sqrt(static_cast<double>(fan_in));
  for (Eigen::Index c = 0; c < m.cols(); ++c)
    for (Eigen::Index r = 0; r < m.rows(); ++r) m(r, c) = static_cast<S>(rng.uniform(-k, k));
}

// Columns are samples throughout: x is (features x batch).

template <class S>
struct Dense {
  Mat<S> W;  // out x in
  Mat<S> b;  // out x 1
  Mat<S> dW, db;
  Mat<S> x_;

  Dense() = default;
  Dense(int in, int out) : W(out, in), b(out, 1), dW(out, in), db(out, 1) {}

  void init(Rng& rng) {
    init_uniform(W, static_cast<int>(W.cols()), rng);
    init_uniform(b, static_cast<int>(W.cols()), rng);
  }

  Mat<S> forward(const Mat<S>& x) {
    x_ = x;
    Mat<S> y = W * x;
    y.colwise() += b.col(0);
    return y;
  }

  Mat<S> backward(const Mat<S>& dy) {
    dW = dy * x_.transpose();
    db = dy.rowwise().sum();
    return W.transpose() * dy;
  }

  void collect(const std::string& prefix, std::vector<Param<S>>& out) {
    out.push_back({prefix + ".W", &W, &dW});
    out.push_back({prefix + ".b", &b, &db});
  }
};

template <class S>
struct ReLU {
  Mat<S> mask_;
  Mat<S> forward(const Mat<S>& x) {
    mask_ = (x.array() > S(0)).template cast<S>().matrix();
    return x.cwiseProduct(mask_);
  }
  Mat<S> backward(const Mat<S>& dy) { return dy.cwiseProduct(mask_); }
};

// Valid (no padding) stride-1 convolution via im2col + GEMM. Input columns
// are channel-major flattened images: index c*H*W + y*W + x.
template <class S>
struct Conv2d {
  int in_ch, ksize, out_ch, in_h, in_w, out_h, out_w;
  Mat<S> W;  // out_ch x (in_ch*k*k)
  Mat<S> b;  // out_ch x 1
  Mat<S> dW, db;
  Mat<S> cols_;  // (in_ch*k*k) x (P*B), P = out_h*out_w
  int batch_ = 0;

  Conv2d(int in_ch_, int ksize_, int out_ch_, int in_h_, int in_w_)
      : in_ch(in_ch_), ksize(ksize_), out_ch(out_ch_), in_h(in_h_), in_w(in_w_),
        out_h(in_h_ - ksize_ + 1), out_w(in_w_ - ksize_ + 1),
        W(out_ch_, in_ch_ * ksize_ * ksize_), b(out_ch_, 1),
        dW(W.rows(), W.cols()), db(out_ch_, 1) {}

  void init(Rng& rng) {
    init_uniform(W, in_ch * ksize * ksize, rng);
    init_uniform(b, in_ch * ksize * ksize, rng);
  }

  Mat<S> forward(const Mat<S>& x) {
    const int B = static_cast<int>(x.cols());
    const int P = out_h * out_w;
    if (x.rows() != in_ch * in_h * in_w) throw NnError("Conv2d: input dimension mismatch");
    batch_ = B;
    cols_.resize(in_ch * ksize * ksize, static_cast<Eigen::Index>(P) * B);
    for (int i = 0; i < B; ++i) {
      for (int oy = 0; oy < out_h; ++oy)
        for (int ox = 0; ox < out_w; ++ox) {
          const Eigen::Index col = static_cast<Eigen::Index>(i) * P + oy * out_w + ox;
          for (int c = 0; c < in_ch; ++c)
            for (int ky = 0; ky < ksize; ++ky)
              for (int kx = 0; kx < ksize; ++kx)
                cols_((c * ksize + ky) * ksize + kx, col) =
                    x(c * in_h * in_w + (oy + ky) * in_w + (ox + kx), i);
        }
    }
    Mat<S> y2 = W * cols_;  // out_ch x (P*B)
    y2.colwise() += b.col(0);
    Mat<S> y(out_ch * P, B);
    for (int i = 0; i < B; ++i)
      for (int co = 0; co < out_ch; ++co)
        for (int p = 0; p < P; ++p) y(co * P + p, i) = y2(co, static_cast<Eigen::Index>(i) * P + p);
    return y;
  }

  Mat<S> backward(const Mat<S>& dy) {
    const int B = batch_;
    const int P = out_h * out_w;
    Mat<S> dy2(out_ch, static_cast<Eigen::Index>(P) * B);
    for (int i = 0; i < B; ++i)
      for (int co = 0; co < out_ch; ++co)
        for (int p = 0; p < P; ++p) dy2(co, static_cast<Eigen::Index>(i) * P + p) = dy(co * P + p, i);
    dW = dy2 * cols_.transpose();
    db = dy2.rowwise().sum();
    const Mat<S> dcols = W.transpose() * dy2;
    Mat<S> dx = Mat<S>::Zero(in_ch * in_h * in_w, B);
    for (int i = 0; i < B; ++i) {
      for (int oy = 0; oy < out_h; ++oy)
        for (int ox = 0; ox < out_w; ++ox) {
          const Eigen::Index col = static_cast<Eigen::Index>(i) * P + oy * out_w + ox;
          for (int c = 0; c < in_ch; ++c)
            for (int ky = 0; ky < ksize; ++ky)
              for (int kx = 0; kx < ksize; ++kx)
                dx(c * in_h * in_w + (oy + ky) * in_w + (ox + kx), i) +=
                    dcols((c * ksize + ky) * ksize + kx, col);
        }
    }
    return dx;
  }

  void collect(const std::string& prefix, std::vector<Param<S>>& out) {
    out.push_back({prefix + ".W", &W, &dW});
    out.push_back({prefix + ".b", &b, &db});
  }
};

// 2x2 stride-2 max pooling; ties resolve to the first (scan-order) maximum.
template <class S>
struct MaxPool2d {
  int ch, in_h, in_w, out_h, out_w;
  Eigen::MatrixXi argmax_;

  MaxPool2d(int ch_, int in_h_, int in_w_)
      : ch(ch_), in_h(in_h_), in_w(in_w_), out_h(in_h_ / 2), out_w(in_w_ / 2) {}

  Mat<S> forward(const Mat<S>& x) {
    const int B = static_cast<int>(x.cols());
    Mat<S> y(ch * out_h * out_w, B);
    argmax_.resize(ch * out_h * out_w, B);
    for (int i = 0; i < B; ++i)
      for (int c = 0; c < ch; ++c)
        for (int oy = 0; oy < out_h; ++oy)
          for (int ox = 0; ox < out_w; ++ox) {
            int best = c * in_h * in_w + (2 * oy) * in_w + 2 * ox;
            S best_v = x(best, i);
            for (int ky = 0; ky < 2; ++ky)
              for (int kx = 0; kx < 2; ++kx) {
                const int idx = c * in_h * in_w + (2 * oy + ky) * in_w + (2 * ox + kx);
                if (x(idx, i) > best_v) {
                  best_v = x(idx, i);
                  best = idx;
                }
              }
            const int o = c * out_h * out_w + oy * out_w + ox;
            y(o, i) = best_v;
            argmax_(o, i) = best;
          }
    return y;
  }

  Mat<S> backward(const Mat<S>& dy) {
    Mat<S> dx = Mat<S>::Zero(ch * in_h * in_w, dy.cols());
    for (Eigen::Index i = 0; i < dy.cols(); ++i)
      for (Eigen::Index o = 0; o < dy.rows(); ++o) dx(argmax_(o, i), i) += dy(o, i);
    return dx;
  }
};

// Scales each column to squared norm `target` (K, so that the complex signal
// carries unit average symbol power).
template <class S>
struct PowerNorm {
  double target = 1.0;
  Mat<S> x_;
  Vec<S> scale_;

  Mat<S> forward(const Mat<S>& x) {
    x_ = x;
    scale_.resize(x.cols());
    Mat<S> y(x.rows(), x.cols());
    for (Eigen::Index i = 0; i < x.cols(); ++i) {
      const S n = x.col(i).norm();
      if (!(n > S(0))) throw NnError("power normalization of an all-zero vector");
      scale_(i) = static_cast<S>(std::sqrt(target)) / n;
      y.col(i) = x.col(i) * scale_(i);
    }
    return y;
  }

  Mat<S> backward(const Mat<S>& dy) {
    Mat<S> dx(dy.rows(), dy.cols());
    for (Eigen::Index i = 0; i < dy.cols(); ++i) {
      const S n2 = x_.col(i).squaredNorm();
      dx.col(i) = scale_(i) * (dy.col(i) - x_.col(i) * (x_.col(i).dot(dy.col(i)) / n2));
    }
    return dx;
  }
};

// Log-sum-exp stabilized softmax cross-entropy, averaged over the batch.
// Per-sample weights scale both the loss and the gradient; dlogits (if
// non-null) receives d(loss)/d(logits).
template <class S>
S cross_entropy_weighted(const Mat<S>& logits, const std::vector<int>& labels,
                         const std::vector<S>& weights, Mat<S>* dlogits) {
  const Eigen::Index B = logits.cols();
  if (static_cast<Eigen::Index>(labels.size()) != B) throw NnError("cross_entropy: label count");
  S loss = S(0);
  if (dlogits) dlogits->resize(logits.rows(), B);
  for (Eigen::Index i = 0; i < B; ++i) {
    const S m = logits.col(i).maxCoeff();
    const Vec<S> shifted = logits.col(i).array() - m;
    const S lse = std::log(shifted.array().exp().sum());
    const S w = weights.empty() ? S(1) : weights[i];
    loss += w * (lse - shifted(labels[i]));
    if (dlogits) {
      Vec<S> p = (shifted.array() - lse).exp();
      p(labels[i]) -= S(1);
      dlogits->col(i) = (w / S(B)) * p;
    }
  }
  return loss / S(B);
}

template <class S>
S cross_entropy(const Mat<S>& logits, const std::vector<int>& labels, Mat<S>* dlogits = nullptr) {
  return cross_entropy_weighted(logits, labels, {}, dlogits);
}

template <class S>
Vec<S> per_sample_cross_entropy(const Mat<S>& logits, const std::vector<int>& labels) {
  Vec<S> out(logits.cols());
  for (Eigen::Index i = 0; i < logits.cols(); ++i) {
    const S m = logits.col(i).maxCoeff();
    const Vec<S> shifted = logits.col(i).array() - m;
    out(i) = std::log(shifted.array().exp().sum()) - shifted(labels[i]);
  }
  return out;
}

template <class S>
Vec<S> softmax(const Vec<S>& logits) {
  const S m = logits.maxCoeff();
  Vec<S> p = (logits.array() - m).exp();
  return p / p.sum();
}

// Argmax with ties broken toward the lowest index.
template <class S>
int argmax_class(const Vec<S>& logits) {
  int best = 0;
  for (Eigen::Index i = 1; i < logits.size(); ++i)
    if (logits(i) > logits(best)) best = static_cast<int>(i);
  return best;
}

}  // namespace starsem::nn
