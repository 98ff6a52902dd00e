#pragma once

#include <Eigen/Dense>
#include <vector>

namespace starsem::nn {

// One image: channel-major flattened pixels in [0,1] plus its class label.
struct ImageSample {
  Eigen::VectorXf pixels;
  int label = 0;
};

// Column-per-image dataset; index i of images pairs with labels[i].
struct Dataset {
  Eigen::MatrixXf images;  // (c*h*w) x N
  std::vector<int> labels;

  int count() const { return static_cast<int>(images.cols()); }

  ImageSample sample(int i) const { return {images.col(i), labels[static_cast<std::size_t>(i)]}; }

  Dataset head(int n) const {
    if (n < 0 || n >= count()) return *this;
    Dataset d;
    d.images = images.leftCols(n);
    d.labels.assign(labels.begin(), labels.begin() + n);
    return d;
  }
};

}  // namespace starsem::nn
