#pragma once

#include <cstddef>
#include <vector>

#include "qent/nn/tensor.hpp"

namespace qent::nn {

template <class T>
struct AdamState {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::size_t t = 0;
  std::vector<std::vector<T>> m;
  std::vector<std::vector<T>> v;
};

/// One bias-corrected Adam update of every parameter from its grad. A
/// parameter with no grad buffer is treated as having a zero gradient.
template <class T>
void adam_step(std::vector<Tensor<T>>& params, AdamState<T>& state);

}  // namespace qent::nn
