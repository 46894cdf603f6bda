#pragma once

#include <cstddef>
#include <vector>

#include "qent/nn/tensor.hpp"
#include "qent/rng.hpp"

namespace qent::nn {

struct Conv2dGeometry {
  std::size_t stride = 1;
  std::size_t padding = 0;
  std::size_t output_padding = 0;  // transposed convolution only
};

/// floor((in + 2 pad - k) / stride) + 1, or 0 when the kernel does not fit.
std::size_t conv_output_size(std::size_t in, std::size_t kernel, const Conv2dGeometry& g);
/// (in - 1) stride - 2 pad + k + output_padding, or 0 when negative.
std::size_t conv_transpose_output_size(std::size_t in, std::size_t kernel, const Conv2dGeometry& g);

/// Cross-correlation. x (N, C, H, W), weight (O, C, k, k), bias (O).
template <class T>
Tensor<T> conv2d(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>& bias, const Conv2dGeometry& g);

/// Adjoint of conv2d in x. x (N, Cin, H, W), weight (Cin, Cout, k, k), bias (Cout).
template <class T>
Tensor<T> conv_transpose2d(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>& bias,
                           const Conv2dGeometry& g);

template <class T>
struct BatchNormState {
  std::vector<T> running_mean;
  std::vector<T> running_var;
};

/// Per-channel normalization over (N, H, W). Train mode uses batch statistics
/// and updates `state` with the given momentum (unbiased variance).
template <class T>
Tensor<T> batchnorm2d(const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& beta, BatchNormState<T>& state,
                      bool train, double eps = 1e-5, double momentum = 0.1);

/// Spatial dropout: zeroes whole (n, c) planes with probability `rate` and
/// scales survivors by 1/(1 - rate). Identity in eval mode.
template <class T>
Tensor<T> dropout2d(const Tensor<T>& x, double rate, bool train, Rng& rng);

template <class T>
Tensor<T> leaky_relu(const Tensor<T>& x, double slope);

/// Exact erf form.
template <class T>
Tensor<T> gelu(const Tensor<T>& x);

/// Softmax over the last axis.
template <class T>
Tensor<T> softmax(const Tensor<T>& z);

/// x (N, in), weight (out, in), bias (out) -> (N, out).
template <class T>
Tensor<T> linear(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>& bias);

/// mean |pred - target|; the subgradient at a tie is 0.
template <class T>
Tensor<T> l1_loss(const Tensor<T>& pred, const Tensor<T>& target);

// Generic graph algebra.
template <class T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b);
template <class T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b);
template <class T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b);
template <class T>
Tensor<T> scale(const Tensor<T>& x, double c);
/// x * s for a single-element tensor s.
template <class T>
Tensor<T> mul_scalar(const Tensor<T>& x, const Tensor<T>& s);
/// x / s for a single-element tensor s.
template <class T>
Tensor<T> div_scalar(const Tensor<T>& x, const Tensor<T>& s);
template <class T>
Tensor<T> sum(const Tensor<T>& x);
template <class T>
Tensor<T> sum_abs(const Tensor<T>& x);
/// 2-D matrix product.
template <class T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b);
template <class T>
Tensor<T> transpose(const Tensor<T>& a);
template <class T>
Tensor<T> reshape(const Tensor<T>& x, Shape shape);
/// out[i] = x[index[i]].
template <class T>
Tensor<T> gather(const Tensor<T>& x, std::vector<std::size_t> index, Shape shape);
/// Concatenates flattened inputs and views the result as `shape`.
template <class T>
Tensor<T> concat(const std::vector<Tensor<T>>& parts, Shape shape);
/// Center crop / zero pad of the two spatial axes of an (N, C, H, W) tensor.
template <class T>
Tensor<T> crop_or_pad(const Tensor<T>& x, std::size_t height, std::size_t width);

}  // namespace qent::nn
