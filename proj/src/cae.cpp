#include "qent/cae.hpp"

#include <cmath>

namespace qent {

namespace {

constexpr std::string_view kKindNames[] = {"Conv2D", "ConvTranspose2D", "BatchNorm2D", "Dropout2D",
                                           "LeakyReLU", "GELU", "Linear", "Softmax"};

nn::Conv2dGeometry geometry(const LayerConfig& l) { return {l.stride, l.padding, l.output_padding}; }

// Block of conv, batchnorm, activation, dropout.
void push_block(std::vector<LayerConfig>& out, LayerConfig conv, bool gelu_act, double slope, double rate,
                bool with_tail = true) {
  const std::size_t channels = conv.out_channels;
  out.push_back(conv);
  if (!with_tail) return;
  out.push_back(batchnorm_layer(channels));
  out.push_back(gelu_act ? gelu_layer() : leaky_relu_layer(slope));
  out.push_back(dropout_layer(rate));
}

struct Recipe {
  std::size_t kernel;
  std::size_t enc_channels[3];  // hidden channels after each encoder conv (2 or 3 used)
  std::size_t enc_stride[3];
  std::size_t enc_pad[3];
  std::size_t dec_stride[3];
  std::size_t dec_pad[3];
  std::size_t depth;
  double slope;
  double rate;
};

Recipe recipe_for(std::size_t d) {
  switch (d) {
    case 2: return {2, {200, 133, 0}, {2, 2, 0}, {0, 0, 0}, {2, 2, 0}, {0, 0, 0}, 2, 0.01, 0.5};
    case 3: return {3, {150, 100, 75}, {2, 2, 2}, {1, 1, 1}, {2, 2, 2}, {1, 1, 1}, 3, 0.01, 0.2};
    case 4: return {4, {200, 100, 66}, {2, 2, 2}, {1, 1, 1}, {2, 2, 2}, {1, 1, 1}, 3, 0.1, 0.01};
    case 5: return {5, {200, 100, 66}, {2, 2, 2}, {2, 2, 2}, {2, 2, 2}, {2, 2, 2}, 3, 0.1, 0.01};
    case 6: return {12, {80, 40, 26}, {1, 3, 1}, {5, 5, 5}, {1, 3, 1}, {5, 5, 5}, 3, 0.01, 0.2};
    case 7: return {15, {70, 35, 23}, {2, 4, 2}, {7, 7, 7}, {2, 5, 2}, {7, 7, 13}, 3, 0.1, 0.1};
    default: throw Error(ErrorCode::UnsupportedDimension, "no builtin architecture for d = " + std::to_string(d));
  }
}

}  // namespace

std::string_view layer_kind_name(LayerKind kind) { return kKindNames[static_cast<int>(kind)]; }

std::optional<LayerKind> parse_layer_kind(std::string_view name) {
  for (int i = 0; i < 8; ++i)
    if (kKindNames[i] == name) return static_cast<LayerKind>(i);
  return std::nullopt;
}

LayerConfig conv_layer(std::size_t in, std::size_t out, std::size_t k, std::size_t stride, std::size_t pad) {
  LayerConfig l;
  l.kind = LayerKind::Conv2D;
  l.in_channels = in;
  l.out_channels = out;
  l.kernel = k;
  l.stride = stride;
  l.padding = pad;
  return l;
}

LayerConfig conv_t_layer(std::size_t in, std::size_t out, std::size_t k, std::size_t stride, std::size_t pad) {
  LayerConfig l = conv_layer(in, out, k, stride, pad);
  l.kind = LayerKind::ConvTranspose2D;
  return l;
}

LayerConfig batchnorm_layer(std::size_t channels) {
  LayerConfig l;
  l.kind = LayerKind::BatchNorm2D;
  l.in_channels = l.out_channels = channels;
  return l;
}

LayerConfig dropout_layer(double rate) {
  LayerConfig l;
  l.kind = LayerKind::Dropout2D;
  l.dropout_rate = rate;
  return l;
}

LayerConfig leaky_relu_layer(double slope) {
  LayerConfig l;
  l.kind = LayerKind::LeakyReLU;
  l.negative_slope = slope;
  return l;
}

LayerConfig gelu_layer() {
  LayerConfig l;
  l.kind = LayerKind::GELU;
  return l;
}

std::vector<LayerConfig> ArchitectureSpec::all_layers() const {
  std::vector<LayerConfig> out = encoder_layers;
  out.push_back(latent_batchnorm);
  out.insert(out.end(), decoder_layers.begin(), decoder_layers.end());
  return out;
}

ArchitectureSpec builtin_spec(std::size_t d) {
  const Recipe r = recipe_for(d);
  ArchitectureSpec spec;
  spec.d = d;
  // Encoder activations alternate LeakyReLU, GELU, LeakyReLU.
  std::size_t in = 2;
  for (std::size_t i = 0; i < r.depth; ++i) {
    const std::size_t out = r.enc_channels[i];
    push_block(spec.encoder_layers, conv_layer(in, out, r.kernel, r.enc_stride[i], r.enc_pad[i]), i % 2 == 1, r.slope,
               r.rate);
    in = out;
  }
  spec.latent_batchnorm = batchnorm_layer(in);
  // Decoder mirrors the channels; activations start with GELU and the last
  // transposed conv has no tail.
  for (std::size_t i = 0; i < r.depth; ++i) {
    const bool last = i + 1 == r.depth;
    const std::size_t out = last ? 2 : r.enc_channels[r.depth - 2 - i];
    push_block(spec.decoder_layers, conv_t_layer(in, out, r.kernel, r.dec_stride[i], r.dec_pad[i]), i % 2 == 0,
               r.slope, r.rate, !last);
    in = out;
  }
  check_channel_chain(spec);
  resolve_shapes(spec);
  return spec;
}

void check_channel_chain(const ArchitectureSpec& spec) {
  std::size_t channels = 2;
  for (const auto& l : spec.all_layers()) {
    if (l.kind == LayerKind::Conv2D || l.kind == LayerKind::ConvTranspose2D || l.kind == LayerKind::BatchNorm2D) {
      if (l.in_channels != channels)
        throw Error(ErrorCode::ShapeMismatch, std::string(layer_kind_name(l.kind)) + " expects " +
                                                  std::to_string(l.in_channels) + " channels, gets " +
                                                  std::to_string(channels));
      channels = l.out_channels;
    }
    if (l.kernel == 0 || l.stride == 0) throw Error(ErrorCode::InvalidConfig, "kernel and stride must be >= 1");
    if (!(l.dropout_rate >= 0.0 && l.dropout_rate < 1.0))
      throw Error(ErrorCode::InvalidConfig, "dropout rate must lie in [0, 1)");
  }
  if (channels != 2) throw Error(ErrorCode::ShapeMismatch, "decoder must end with 2 channels");
}

ShapeTrace trace_shapes(const ArchitectureSpec& spec) {
  ShapeTrace t;
  std::size_t side = spec.side();
  t.encoder_sides.push_back(side);
  for (const auto& l : spec.encoder_layers) {
    if (l.kind != LayerKind::Conv2D) continue;
    side = nn::conv_output_size(side, l.kernel, geometry(l));
    t.encoder_sides.push_back(side);
  }
  t.decoder_sides.push_back(side);
  for (const auto& l : spec.decoder_layers) {
    if (l.kind != LayerKind::ConvTranspose2D) continue;
    side = nn::conv_transpose_output_size(side, l.kernel, geometry(l));
    t.decoder_sides.push_back(side);
    t.output_paddings.push_back(l.output_padding);
  }
  t.final_crop = spec.final_crop;
  return t;
}

ShapeTrace resolve_shapes(ArchitectureSpec& spec) {
  const ShapeTrace enc = trace_shapes(spec);
  const auto& targets = enc.encoder_sides;  // decoder layer i aims at targets[depth - 1 - i]
  const std::size_t depth = targets.size() - 1;
  std::size_t side = targets.back();
  std::size_t i = 0;
  for (auto& l : spec.decoder_layers) {
    if (l.kind != LayerKind::ConvTranspose2D) continue;
    const std::size_t target = targets[depth - 1 - i];
    l.output_padding = 0;
    const std::size_t base = nn::conv_transpose_output_size(side, l.kernel, geometry(l));
    if (base <= target && target - base < l.stride)
      l.output_padding = target - base;
    side = base + l.output_padding;
    ++i;
  }
  spec.final_crop = side != spec.side();
  return trace_shapes(spec);
}

template <class T>
CaeModel<T>::CaeModel(ArchitectureSpec spec) : spec_(std::move(spec)) {
  check_channel_chain(spec_);
  flat_ = spec_.all_layers();
  layers_.resize(flat_.size());
  for (std::size_t i = 0; i < flat_.size(); ++i) {
    const auto& l = flat_[i];
    auto& p = layers_[i];
    switch (l.kind) {
      case LayerKind::Conv2D:
        p.weight = nn::Tensor<T>::zeros({l.out_channels, l.in_channels, l.kernel, l.kernel}, true);
        p.bias = nn::Tensor<T>::zeros({l.out_channels}, true);
        break;
      case LayerKind::ConvTranspose2D:
        p.weight = nn::Tensor<T>::zeros({l.in_channels, l.out_channels, l.kernel, l.kernel}, true);
        p.bias = nn::Tensor<T>::zeros({l.out_channels}, true);
        break;
      case LayerKind::Linear:
        p.weight = nn::Tensor<T>::zeros({l.out_channels, l.in_channels}, true);
        p.bias = nn::Tensor<T>::zeros({l.out_channels}, true);
        break;
      case LayerKind::BatchNorm2D:
        p.weight = nn::Tensor<T>::from({l.out_channels}, std::vector<T>(l.out_channels, T(1)), true);
        p.bias = nn::Tensor<T>::zeros({l.out_channels}, true);
        p.bn.running_mean.assign(l.out_channels, T(0));
        p.bn.running_var.assign(l.out_channels, T(1));
        break;
      default:
        break;
    }
  }
}

template <class T>
void CaeModel<T>::init(std::uint64_t seed) {
  Rng rng(seed);
  for (std::size_t i = 0; i < flat_.size(); ++i) {
    const auto& l = flat_[i];
    auto& p = layers_[i];
    if (l.kind == LayerKind::Conv2D || l.kind == LayerKind::ConvTranspose2D || l.kind == LayerKind::Linear) {
      const std::size_t k2 = l.kind == LayerKind::Linear ? 1 : l.kernel * l.kernel;
      const double bound = std::sqrt(6.0 / static_cast<double>(l.in_channels * k2));
      std::uniform_real_distribution<double> u(-bound, bound);
      for (auto& w : p.weight.values()) w = static_cast<T>(u(rng));
      for (auto& b : p.bias.values()) b = T(0);
    } else if (l.kind == LayerKind::BatchNorm2D) {
      for (auto& g : p.weight.values()) g = T(1);
      for (auto& b : p.bias.values()) b = T(0);
      p.bn.running_mean.assign(l.out_channels, T(0));
      p.bn.running_var.assign(l.out_channels, T(1));
    }
  }
  initialized_ = true;
}

template <class T>
nn::Tensor<T> CaeModel<T>::forward(const nn::Tensor<T>& x, bool train, Rng* dropout_rng) {
  if (!initialized_) throw Error(ErrorCode::UninitializedParameters, "model parameters were never initialized");
  const std::size_t n = side();
  if (x.rank() != 4 || x.dim(1) != 2 || x.dim(2) != n || x.dim(3) != n)
    throw Error(ErrorCode::ShapeMismatch,
                "model for d = " + std::to_string(spec_.d) + " expects (N, 2, " + std::to_string(n) + ", " +
                    std::to_string(n) + "), got " + nn::shape_str(x.shape()));
  nn::Tensor<T> h = x;
  for (std::size_t i = 0; i < flat_.size(); ++i) {
    const auto& l = flat_[i];
    auto& p = layers_[i];
    switch (l.kind) {
      case LayerKind::Conv2D: h = nn::conv2d(h, p.weight, p.bias, geometry(l)); break;
      case LayerKind::ConvTranspose2D: h = nn::conv_transpose2d(h, p.weight, p.bias, geometry(l)); break;
      case LayerKind::BatchNorm2D: h = nn::batchnorm2d(h, p.weight, p.bias, p.bn, train, l.epsilon, l.momentum); break;
      case LayerKind::Dropout2D:
        if (train && l.dropout_rate > 0.0) {
          if (!dropout_rng) throw Error(ErrorCode::InvalidConfig, "train-mode forward needs a dropout generator");
          h = nn::dropout2d(h, l.dropout_rate, true, *dropout_rng);
        }
        break;
      case LayerKind::LeakyReLU: h = nn::leaky_relu(h, l.negative_slope); break;
      case LayerKind::GELU: h = nn::gelu(h); break;
      case LayerKind::Linear: h = nn::linear(h, p.weight, p.bias); break;
      case LayerKind::Softmax: h = nn::softmax(h); break;
    }
  }
  if (spec_.final_crop) h = nn::crop_or_pad(h, n, n);
  return h;
}

template <class T>
std::vector<nn::Tensor<T>> CaeModel<T>::parameters() const {
  std::vector<nn::Tensor<T>> out;
  for (std::size_t i = 0; i < flat_.size(); ++i) {
    if (!flat_[i].has_parameters()) continue;
    out.push_back(layers_[i].weight);
    out.push_back(layers_[i].bias);
  }
  return out;
}

template <class T>
std::vector<NamedTensor<T>> CaeModel<T>::named_tensors() const {
  const std::size_t n_enc = spec_.encoder_layers.size();
  auto prefix = [&](std::size_t i) {
    if (i < n_enc) return "encoder." + std::to_string(i);
    if (i == n_enc) return std::string("latent");
    return "decoder." + std::to_string(i - n_enc - 1);
  };
  std::vector<NamedTensor<T>> out;
  for (std::size_t i = 0; i < flat_.size(); ++i) {
    if (!flat_[i].has_parameters()) continue;
    out.push_back({prefix(i) + ".weight", layers_[i].weight});
    out.push_back({prefix(i) + ".bias", layers_[i].bias});
  }
  for (std::size_t i = 0; i < flat_.size(); ++i) {
    if (flat_[i].kind != LayerKind::BatchNorm2D) continue;
    const auto& bn = layers_[i].bn;
    const std::size_t c = bn.running_mean.size();
    out.push_back({prefix(i) + ".running_mean", nn::Tensor<T>::from({c}, bn.running_mean)});
    out.push_back({prefix(i) + ".running_var", nn::Tensor<T>::from({c}, bn.running_var)});
  }
  return out;
}

template <class T>
std::vector<nn::Tensor<T>> CaeModel<T>::conv_weights() const {
  std::vector<nn::Tensor<T>> out;
  for (std::size_t i = 0; i < flat_.size(); ++i)
    if (flat_[i].kind == LayerKind::Conv2D || flat_[i].kind == LayerKind::ConvTranspose2D ||
        flat_[i].kind == LayerKind::Linear)
      out.push_back(layers_[i].weight);
  return out;
}

template <class T>
std::size_t CaeModel<T>::parameter_count() const {
  std::size_t total = 0;
  for (const auto& p : parameters()) total += p.numel();
  return total;
}

template <class T>
void CaeModel<T>::set_requires_grad(bool on) {
  for (auto& p : parameters()) p.set_requires_grad(on);
}

template <class T>
void CaeModel<T>::zero_grad() {
  for (auto& p : parameters()) p.zero_grad();
}

template <class T>
template <class U>
CaeModel<U> CaeModel<T>::cast() const {
  CaeModel<U> out(spec_);
  auto convert = [](std::span<const T> src, std::span<U> dst) {
    for (std::size_t i = 0; i < src.size(); ++i) dst[i] = static_cast<U>(src[i]);
  };
  auto& dst = out.layers();
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    if (!flat_[i].has_parameters()) continue;
    convert(layers_[i].weight.values(), dst[i].weight.values());
    convert(layers_[i].bias.values(), dst[i].bias.values());
    dst[i].bn.running_mean.assign(layers_[i].bn.running_mean.begin(), layers_[i].bn.running_mean.end());
    dst[i].bn.running_var.assign(layers_[i].bn.running_var.begin(), layers_[i].bn.running_var.end());
  }
  if (initialized_) out.mark_initialized();
  return out;
}

template <class T>
nn::Tensor<T> encode_state(const ComplexMatrix& rho) {
  return encode_batch<T>({&rho});
}

template <class T>
nn::Tensor<T> encode_batch(const std::vector<const ComplexMatrix*>& states) {
  if (states.empty()) throw Error(ErrorCode::EmptySet, "encode_batch of no states");
  const std::size_t n = states.front()->rows();
  const std::size_t plane = n * n;
  std::vector<T> v(states.size() * 2 * plane);
  for (std::size_t b = 0; b < states.size(); ++b) {
    const auto& m = *states[b];
    if (m.rows() != n || m.cols() != n) throw Error(ErrorCode::ShapeMismatch, "encode_batch needs equal square states");
    const auto data = m.data();
    T* re = v.data() + b * 2 * plane;
    T* im = re + plane;
    for (std::size_t i = 0; i < plane; ++i) {
      re[i] = static_cast<T>(data[i].real());
      im[i] = static_cast<T>(data[i].imag());
    }
  }
  return nn::Tensor<T>::from({states.size(), 2, n, n}, std::move(v));
}

template <class T>
ComplexMatrix decode_output(const nn::Tensor<T>& t, std::size_t index) {
  if (t.rank() != 4 || t.dim(1) != 2 || t.dim(2) != t.dim(3) || index >= t.dim(0))
    throw Error(ErrorCode::ShapeMismatch, "decode_output expects (N, 2, n, n), got " + nn::shape_str(t.shape()));
  const std::size_t n = t.dim(2), plane = n * n;
  ComplexMatrix m(n, n);
  const T* re = t.values().data() + index * 2 * plane;
  const T* im = re + plane;
  auto out = m.data();
  for (std::size_t i = 0; i < plane; ++i) out[i] = cplx(re[i], im[i]);
  return m;
}

template <class T>
double reconstruction_error(CaeModel<T>& model, const ComplexMatrix& rho) {
  if (rho.rows() != model.side() || rho.cols() != model.side())
    throw Error(ErrorCode::DimensionMismatch, "state of side " + std::to_string(rho.rows()) + " for a model of side " +
                                                  std::to_string(model.side()));
  nn::NoGradGuard guard;
  const auto out = model.forward(encode_state<T>(rho), false);
  return elementwise_l1(decode_output(out), rho);
}

template class CaeModel<float>;
template class CaeModel<double>;
template CaeModel<double> CaeModel<float>::cast<double>() const;
template CaeModel<float> CaeModel<double>::cast<float>() const;
template CaeModel<float> CaeModel<float>::cast<float>() const;
template CaeModel<double> CaeModel<double>::cast<double>() const;
template nn::Tensor<float> encode_state<float>(const ComplexMatrix&);
template nn::Tensor<double> encode_state<double>(const ComplexMatrix&);
template nn::Tensor<float> encode_batch<float>(const std::vector<const ComplexMatrix*>&);
template nn::Tensor<double> encode_batch<double>(const std::vector<const ComplexMatrix*>&);
template ComplexMatrix decode_output(const nn::Tensor<float>&, std::size_t);
template ComplexMatrix decode_output(const nn::Tensor<double>&, std::size_t);
template double reconstruction_error(CaeModel<float>&, const ComplexMatrix&);
template double reconstruction_error(CaeModel<double>&, const ComplexMatrix&);

}  // namespace qent
