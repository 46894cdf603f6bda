#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "qent/linalg.hpp"
#include "qent/nn/ops.hpp"
#include "qent/nn/tensor.hpp"
#include "qent/rng.hpp"

namespace qent {

enum class LayerKind { Conv2D, ConvTranspose2D, BatchNorm2D, Dropout2D, LeakyReLU, GELU, Linear, Softmax };

std::string_view layer_kind_name(LayerKind kind);
std::optional<LayerKind> parse_layer_kind(std::string_view name);

struct LayerConfig {
  LayerKind kind = LayerKind::Conv2D;
  std::size_t in_channels = 0;
  std::size_t out_channels = 0;
  std::size_t kernel = 1;
  std::size_t stride = 1;
  std::size_t padding = 0;
  std::size_t output_padding = 0;
  double negative_slope = 0.01;
  double dropout_rate = 0.0;
  double epsilon = 1e-5;
  double momentum = 0.1;

  bool has_parameters() const {
    return kind == LayerKind::Conv2D || kind == LayerKind::ConvTranspose2D || kind == LayerKind::BatchNorm2D ||
           kind == LayerKind::Linear;
  }
  bool operator==(const LayerConfig&) const = default;
};

LayerConfig conv_layer(std::size_t in, std::size_t out, std::size_t k, std::size_t stride, std::size_t pad);
LayerConfig conv_t_layer(std::size_t in, std::size_t out, std::size_t k, std::size_t stride, std::size_t pad);
LayerConfig batchnorm_layer(std::size_t channels);
LayerConfig dropout_layer(double rate);
LayerConfig leaky_relu_layer(double slope);
LayerConfig gelu_layer();

struct ArchitectureSpec {
  std::size_t d = 0;
  std::vector<LayerConfig> encoder_layers;
  LayerConfig latent_batchnorm;
  std::vector<LayerConfig> decoder_layers;
  // Set by the shape harness when no output_padding choice reaches the
  // input side; the decoder output is then center cropped or zero padded.
  bool final_crop = false;

  std::size_t side() const { return d * d; }
  /// encoder, latent batchnorm, decoder.
  std::vector<LayerConfig> all_layers() const;
  bool operator==(const ArchitectureSpec&) const = default;
};

/// Layer list for local dimension d in 2..7, with output paddings resolved.
ArchitectureSpec builtin_spec(std::size_t d);

struct ShapeTrace {
  std::vector<std::size_t> encoder_sides;  // input side, then after each conv
  std::vector<std::size_t> decoder_sides;  // latent side, then after each transposed conv
  std::vector<std::size_t> output_paddings;
  bool final_crop = false;
};

/// Picks output_padding in [0, stride) for every transposed conv so the
/// decoder mirrors the encoder sides where possible, and flags a final crop
/// when the last layer cannot reach the input side.
ShapeTrace resolve_shapes(ArchitectureSpec& spec);
/// Side after each conv of the spec as is, without changing it.
ShapeTrace trace_shapes(const ArchitectureSpec& spec);

/// Throws ShapeMismatch when channels do not chain from 2 back to 2.
void check_channel_chain(const ArchitectureSpec& spec);

inline constexpr std::string_view kInitRecipe = "kaiming_uniform_fanin_v1";

template <class T>
struct LayerParams {
  nn::Tensor<T> weight;  // conv, linear; gamma for batchnorm
  nn::Tensor<T> bias;    // conv, linear; beta for batchnorm
  nn::BatchNormState<T> bn;
};

template <class T>
struct NamedTensor {
  std::string name;
  nn::Tensor<T> tensor;
};

template <class T>
class CaeModel {
 public:
  CaeModel() = default;
  /// Allocates zero parameters; call init() or load values before forward().
  explicit CaeModel(ArchitectureSpec spec);

  const ArchitectureSpec& spec() const { return spec_; }
  std::size_t side() const { return spec_.side(); }
  bool initialized() const { return initialized_; }
  void mark_initialized() { initialized_ = true; }

  /// Kaiming-uniform weights with bound sqrt(6 / fan_in), zero biases,
  /// gamma = 1, beta = 0, running stats (0, 1).
  void init(std::uint64_t seed);

  /// x (N, 2, n, n) -> (N, 2, n, n). Train mode needs a dropout generator.
  nn::Tensor<T> forward(const nn::Tensor<T>& x, bool train, Rng* dropout_rng = nullptr);

  /// Trainable tensors in a fixed order.
  std::vector<nn::Tensor<T>> parameters() const;
  /// Trainable tensors followed by batchnorm running statistics as leaves.
  std::vector<NamedTensor<T>> named_tensors() const;
  std::vector<nn::Tensor<T>> conv_weights() const;
  std::size_t parameter_count() const;

  void set_requires_grad(bool on);
  void zero_grad();

  std::vector<LayerParams<T>>& layers() { return layers_; }
  const std::vector<LayerParams<T>>& layers() const { return layers_; }

  /// Deep copy converted to another precision.
  template <class U>
  CaeModel<U> cast() const;

 private:
  ArchitectureSpec spec_;
  std::vector<LayerConfig> flat_;
  std::vector<LayerParams<T>> layers_;
  bool initialized_ = false;
};

/// (1, 2, n, n) tensor with Re(rho) in channel 0 and Im(rho) in channel 1.
template <class T>
nn::Tensor<T> encode_state(const ComplexMatrix& rho);
template <class T>
nn::Tensor<T> encode_state(const DensityMatrix& rho) {
  return encode_state<T>(rho.mat());
}

/// Stacks states into (N, 2, n, n).
template <class T>
nn::Tensor<T> encode_batch(const std::vector<const ComplexMatrix*>& states);

/// Re + i Im of item `index` of an (N, 2, n, n) tensor.
template <class T>
ComplexMatrix decode_output(const nn::Tensor<T>& t, std::size_t index = 0);

/// Mean absolute difference between rho and its single-sample eval-mode
/// reconstruction over the two real channels.
template <class T>
double reconstruction_error(CaeModel<T>& model, const ComplexMatrix& rho);

}  // namespace qent
