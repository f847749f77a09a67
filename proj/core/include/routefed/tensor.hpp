#pragma once

#include <cstddef>
#include <vector>

namespace routefed {

// Dense segments x time x features block, row-major in that order.
struct Tensor3 {
  std::size_t segments = 0;
  std::size_t time = 0;
  std::size_t features = 0;
  std::vector<double> data;

  Tensor3() = default;
  Tensor3(std::size_t k, std::size_t t, std::size_t f, double fill = 0.0)
      : segments(k), time(t), features(f), data(k * t * f, fill) {}

  double& at(std::size_t k, std::size_t t, std::size_t f) {
    return data[(k * time + t) * features + f];
  }
  double at(std::size_t k, std::size_t t, std::size_t f) const {
    return data[(k * time + t) * features + f];
  }

  bool operator==(const Tensor3&) const = default;
};

}  // namespace routefed
