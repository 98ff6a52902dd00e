#pragma once

#include "starsem/nn/layers.hpp"

namespace starsem::nn {

// Plain LeNet classifier used for pre-training the convolutional trunk:
// conv(1->6,5) pool conv(6->16,5) pool fc(256->120) fc(120->84) fc(84->10).
template <class S>
struct LeNetClassifier {
  Conv2d<S> conv1;
  ReLU<S> r1;
  MaxPool2d<S> pool1;
  Conv2d<S> conv2;
  ReLU<S> r2;
  MaxPool2d<S> pool2;
  Dense<S> fc1;
  ReLU<S> r3;
  Dense<S> fc2;
  ReLU<S> r4;
  Dense<S> fc3;

  LeNetClassifier()
      : conv1(1, 5, 6, 28, 28), pool1(6, 24, 24), conv2(6, 5, 16, 12, 12), pool2(16, 8, 8),
        fc1(256, 120), fc2(120, 84), fc3(84, 10) {}

  void init(Rng& rng) {
    conv1.init(rng);
    conv2.init(rng);
    fc1.init(rng);
    fc2.init(rng);
    fc3.init(rng);
  }

  Mat<S> forward(const Mat<S>& images) {
    Mat<S> h = pool1.forward(r1.forward(conv1.forward(images)));
    h = pool2.forward(r2.forward(conv2.forward(h)));
    h = r3.forward(fc1.forward(h));
    h = r4.forward(fc2.forward(h));
    return fc3.forward(h);
  }

  void backward(const Mat<S>& dlogits) {
    Mat<S> d = fc3.backward(dlogits);
    d = fc2.backward(r4.backward(d));
    d = fc1.backward(r3.backward(d));
    d = conv2.backward(r2.backward(pool2.backward(d)));
    conv1.backward(r1.backward(pool1.backward(d)));
  }

  std::vector<Param<S>> params() {
    std::vector<Param<S>> p;
    conv1.collect("conv1", p);
    conv2.collect("conv2", p);
    fc1.collect("fc1", p);
    fc2.collect("fc2", p);
    fc3.collect("fc3", p);
    return p;
  }
};

// JSC encoder: the LeNet trunk plus a fully-connected head to 2K reals and a
// power normalization so every encoded signal has unit average symbol power.
template <class S>
struct JscEncoder {
  int symbol_count;
  Conv2d<S> conv1;
  ReLU<S> r1;
  MaxPool2d<S> pool1;
  Conv2d<S> conv2;
  ReLU<S> r2;
  MaxPool2d<S> pool2;
  Dense<S> head;
  PowerNorm<S> norm;

  explicit JscEncoder(int k)
      : symbol_count(k), conv1(1, 5, 6, 28, 28), pool1(6, 24, 24), conv2(6, 5, 16, 12, 12),
        pool2(16, 8, 8), head(256, 2 * k) {
    norm.target = static_cast<double>(k);
  }

  void init(Rng& rng) {
    conv1.init(rng);
    conv2.init(rng);
    head.init(rng);
  }

  // Copy the pre-trained convolutional trunk; the head stays as initialized.
  void adopt_trunk(const LeNetClassifier<S>& lenet) {
    conv1.W = lenet.conv1.W;
    conv1.b = lenet.conv1.b;
    conv2.W = lenet.conv2.W;
    conv2.b = lenet.conv2.b;
  }

  Mat<S> forward(const Mat<S>& images) {
    Mat<S> h = pool1.forward(r1.forward(conv1.forward(images)));
    h = pool2.forward(r2.forward(conv2.forward(h)));
    return norm.forward(head.forward(h));
  }

  void backward(const Mat<S>& dv) {
    Mat<S> d = head.backward(norm.backward(dv));
    d = conv2.backward(r2.backward(pool2.backward(d)));
    conv1.backward(r1.backward(pool1.backward(d)));
  }

  std::vector<Param<S>> params() {
    std::vector<Param<S>> p;
    conv1.collect("conv1", p);
    conv2.collect("conv2", p);
    head.collect("head", p);
    return p;
  }
};

// Classifier decoder shared by Bob and Eve: 2K -> 256 -> 10.
template <class S>
struct JscDecoder {
  int symbol_count;
  Dense<S> fc1;
  ReLU<S> r1;
  Dense<S> fc2;

  explicit JscDecoder(int k) : symbol_count(k), fc1(2 * k, 256), fc2(256, 10) {}

  void init(Rng& rng) {
    fc1.init(rng);
    fc2.init(rng);
  }

  Mat<S> forward(const Mat<S>& v) { return fc2.forward(r1.forward(fc1.forward(v))); }

  // Returns the gradient w.r.t. the decoder input.
  Mat<S> backward(const Mat<S>& dlogits) { return fc1.backward(r1.backward(fc2.backward(dlogits))); }

  std::vector<Param<S>> params() {
    std::vector<Param<S>> p;
    fc1.collect("fc1", p);
    fc2.collect("fc2", p);
    return p;
  }
};

// d(cross-entropy)/d(input) at one received feature vector. Exact for the
// computation graph; feeds the FGSM direction.
template <class S>
Vec<S> input_gradient(JscDecoder<S>& decoder, const Vec<S>& v, int label) {
  const Mat<S> logits = decoder.forward(v);
  Mat<S> dlogits;
  cross_entropy<S>(logits, {label}, &dlogits);
  return decoder.backward(dlogits).col(0);
}

}  // namespace starsem::nn
