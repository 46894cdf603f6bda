#include "qent/nn/ops.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace qent::nn {

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw Error(ErrorCode::ShapeMismatch, what);
}

template <class T>
void require_same_shape(const Tensor<T>& a, const Tensor<T>& b, const char* op) {
  require(a.shape() == b.shape(), std::string(op) + ": shapes " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
}

// Elementwise map with derivative dy/dx evaluated from the input.
template <class T, class F, class D>
Tensor<T> unary(const Tensor<T>& x, F f, D df) {
  std::vector<T> y(x.numel());
  const auto xv = x.values();
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = f(xv[i]);
  return detail::make_result<T>(x.shape(), std::move(y), {x.node()}, [df](Node<T>& self) {
    auto& xn = *self.parents[0];
    auto& g = detail::grad_buffer(xn);
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * df(xn.value[i]);
  });
}

}  // namespace

template <class T>
Tensor<T> batchnorm2d(const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& beta, BatchNormState<T>& state,
                      bool train, double eps, double momentum) {
  require(x.rank() == 4, "batchnorm2d expects rank-4 input");
  const std::size_t n = x.dim(0), c = x.dim(1), hw = x.dim(2) * x.dim(3);
  require(gamma.numel() == c && beta.numel() == c, "batchnorm2d affine parameter size");
  if (state.running_mean.empty()) state.running_mean.assign(c, T(0));
  if (state.running_var.empty()) state.running_var.assign(c, T(1));
  require(state.running_mean.size() == c && state.running_var.size() == c, "batchnorm2d running stats size");
  const std::size_t count = n * hw;
  if (train && count <= 1) throw Error(ErrorCode::BatchTooSmall, "batchnorm2d train mode needs N*H*W > 1");

  const auto xv = x.values();
  const auto gv = gamma.values();
  const auto bv = beta.values();
  std::vector<T> y(x.numel());
  std::vector<T> xhat(train ? x.numel() : 0);
  std::vector<T> inv_std(c);

  for (std::size_t ch = 0; ch < c; ++ch) {
    double mean, var;
    if (train) {
      double s = 0.0;
      for (std::size_t b = 0; b < n; ++b)
        for (std::size_t i = 0; i < hw; ++i) s += xv[(b * c + ch) * hw + i];
      mean = s / static_cast<double>(count);
      double ss = 0.0;
      for (std::size_t b = 0; b < n; ++b)
        for (std::size_t i = 0; i < hw; ++i) {
          const double dlt = xv[(b * c + ch) * hw + i] - mean;
          ss += dlt * dlt;
        }
      var = ss / static_cast<double>(count);
      const double unbiased = ss / static_cast<double>(count - 1);
      state.running_mean[ch] = static_cast<T>((1.0 - momentum) * state.running_mean[ch] + momentum * mean);
      state.running_var[ch] = static_cast<T>((1.0 - momentum) * state.running_var[ch] + momentum * unbiased);
    } else {
      mean = state.running_mean[ch];
      var = state.running_var[ch];
    }
    const double istd = 1.0 / std::sqrt(var + eps);
    inv_std[ch] = static_cast<T>(istd);
    for (std::size_t b = 0; b < n; ++b)
      for (std::size_t i = 0; i < hw; ++i) {
        const std::size_t idx = (b * c + ch) * hw + i;
        const T xh = static_cast<T>((xv[idx] - mean) * istd);
        if (train) xhat[idx] = xh;
        y[idx] = gv[ch] * xh + bv[ch];
      }
  }

  std::vector<T> eval_mean;
  if (!train) eval_mean = state.running_mean;
  return detail::make_result<T>(
      x.shape(), std::move(y), {x.node(), gamma.node(), beta.node()},
      [n, c, hw, train, xhat = std::move(xhat), inv_std = std::move(inv_std),
       eval_mean = std::move(eval_mean)](Node<T>& self) {
        auto& xn = *self.parents[0];
        auto& gn = *self.parents[1];
        auto& bn = *self.parents[2];
        const auto& gy = self.grad;
        const double m = static_cast<double>(n * hw);
        for (std::size_t ch = 0; ch < c; ++ch) {
          double sum_dy = 0.0, sum_dy_xhat = 0.0;
          for (std::size_t b = 0; b < n; ++b)
            for (std::size_t i = 0; i < hw; ++i) {
              const std::size_t idx = (b * c + ch) * hw + i;
              const double xh = train ? static_cast<double>(xhat[idx])
                                      : (static_cast<double>(xn.value[idx]) - eval_mean[ch]) * inv_std[ch];
              sum_dy += gy[idx];
              sum_dy_xhat += gy[idx] * xh;
            }
          if (gn.requires_grad) detail::grad_buffer(gn)[ch] += static_cast<T>(sum_dy_xhat);
          if (bn.requires_grad) detail::grad_buffer(bn)[ch] += static_cast<T>(sum_dy);
          if (!xn.requires_grad) continue;
          auto& gx = detail::grad_buffer(xn);
          const double gamma_c = gn.value[ch];
          const double istd = inv_std[ch];
          for (std::size_t b = 0; b < n; ++b)
            for (std::size_t i = 0; i < hw; ++i) {
              const std::size_t idx = (b * c + ch) * hw + i;
              if (train) {
                const double xh = xhat[idx];
                gx[idx] += static_cast<T>(gamma_c * istd / m * (m * gy[idx] - sum_dy - xh * sum_dy_xhat));
              } else {
                gx[idx] += static_cast<T>(gamma_c * istd * gy[idx]);
              }
            }
        }
      });
}

template <class T>
Tensor<T> dropout2d(const Tensor<T>& x, double rate, bool train, Rng& rng) {
  require(x.rank() == 4, "dropout2d expects rank-4 input");
  if (!(rate >= 0.0 && rate < 1.0)) throw Error(ErrorCode::ParamOutOfRange, "dropout rate must lie in [0, 1)");
  if (!train || rate == 0.0) return x;
  const std::size_t planes = x.dim(0) * x.dim(1), hw = x.dim(2) * x.dim(3);
  std::bernoulli_distribution drop(rate);
  const T keep_scale = static_cast<T>(1.0 / (1.0 - rate));
  std::vector<T> mask(planes);
  for (auto& m : mask) m = drop(rng) ? T(0) : keep_scale;
  std::vector<T> y(x.numel());
  const auto xv = x.values();
  for (std::size_t p = 0; p < planes; ++p)
    for (std::size_t i = 0; i < hw; ++i) y[p * hw + i] = xv[p * hw + i] * mask[p];
  return detail::make_result<T>(x.shape(), std::move(y), {x.node()}, [hw, mask = std::move(mask)](Node<T>& self) {
    auto& g = detail::grad_buffer(*self.parents[0]);
    for (std::size_t p = 0; p < mask.size(); ++p)
      for (std::size_t i = 0; i < hw; ++i) g[p * hw + i] += self.grad[p * hw + i] * mask[p];
  });
}

template <class T>
Tensor<T> leaky_relu(const Tensor<T>& x, double slope) {
  const T s = static_cast<T>(slope);
  return unary(x, [s](T v) { return v >= T(0) ? v : s * v; }, [s](T v) { return v >= T(0) ? T(1) : s; });
}

template <class T>
Tensor<T> gelu(const Tensor<T>& x) {
  constexpr double inv_sqrt2 = 1.0 / std::numbers::sqrt2;
  constexpr double inv_sqrt_2pi = 0.5 * std::numbers::inv_sqrtpi * std::numbers::sqrt2;
  return unary(
      x, [](T v) { return static_cast<T>(0.5 * v * (1.0 + std::erf(v * inv_sqrt2))); },
      [](T v) {
        const double cdf = 0.5 * (1.0 + std::erf(v * inv_sqrt2));
        const double pdf = inv_sqrt_2pi * std::exp(-0.5 * double(v) * v);
        return static_cast<T>(cdf + v * pdf);
      });
}

template <class T>
Tensor<T> softmax(const Tensor<T>& z) {
  require(z.rank() >= 1 && z.numel() > 0, "softmax of an empty tensor");
  const std::size_t len = z.shape().back();
  const std::size_t rows = z.numel() / len;
  const auto zv = z.values();
  std::vector<T> y(z.numel());
  for (std::size_t r = 0; r < rows; ++r) {
    const T* in = zv.data() + r * len;
    const double mx = *std::max_element(in, in + len);
    double total = 0.0;
    std::vector<double> e(len);
    for (std::size_t i = 0; i < len; ++i) total += (e[i] = std::exp(in[i] - mx));
    for (std::size_t i = 0; i < len; ++i) y[r * len + i] = static_cast<T>(e[i] / total);
  }
  auto out = detail::make_result<T>(z.shape(), y, {z.node()}, [len, rows, y](Node<T>& self) {
    auto& g = detail::grad_buffer(*self.parents[0]);
    for (std::size_t r = 0; r < rows; ++r) {
      double dot = 0.0;
      for (std::size_t i = 0; i < len; ++i) dot += double(self.grad[r * len + i]) * y[r * len + i];
      for (std::size_t i = 0; i < len; ++i)
        g[r * len + i] += static_cast<T>(y[r * len + i] * (self.grad[r * len + i] - dot));
    }
  });
  return out;
}

template <class T>
Tensor<T> linear(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>& bias) {
  require(x.rank() == 2 && weight.rank() == 2, "linear expects (N, in) input and (out, in) weight");
  const std::size_t n = x.dim(0), in = x.dim(1), out = weight.dim(0);
  require(weight.dim(1) == in && bias.numel() == out, "linear weight/bias shape");
  const auto xv = x.values(), wv = weight.values(), bv = bias.values();
  std::vector<T> y(n * out);
  for (std::size_t b = 0; b < n; ++b)
    for (std::size_t o = 0; o < out; ++o) {
      double s = bv[o];
      for (std::size_t i = 0; i < in; ++i) s += double(xv[b * in + i]) * wv[o * in + i];
      y[b * out + o] = static_cast<T>(s);
    }
  return detail::make_result<T>({n, out}, std::move(y), {x.node(), weight.node(), bias.node()},
                                [n, in, out](Node<T>& self) {
                                  auto& xn = *self.parents[0];
                                  auto& wn = *self.parents[1];
                                  auto& bn = *self.parents[2];
                                  for (std::size_t b = 0; b < n; ++b)
                                    for (std::size_t o = 0; o < out; ++o) {
                                      const T gy = self.grad[b * out + o];
                                      if (bn.requires_grad) detail::grad_buffer(bn)[o] += gy;
                                      if (wn.requires_grad) {
                                        auto& gw = detail::grad_buffer(wn);
                                        for (std::size_t i = 0; i < in; ++i) gw[o * in + i] += gy * xn.value[b * in + i];
                                      }
                                      if (xn.requires_grad) {
                                        auto& gx = detail::grad_buffer(xn);
                                        for (std::size_t i = 0; i < in; ++i) gx[b * in + i] += gy * wn.value[o * in + i];
                                      }
                                    }
                                });
}

template <class T>
Tensor<T> l1_loss(const Tensor<T>& pred, const Tensor<T>& target) {
  require_same_shape(pred, target, "l1_loss");
  require(pred.numel() > 0, "l1_loss of empty tensors");
  const auto pv = pred.values(), tv = target.values();
  double s = 0.0;
  for (std::size_t i = 0; i < pv.size(); ++i) s += std::abs(double(pv[i]) - double(tv[i]));
  const double n = static_cast<double>(pv.size());
  return detail::make_result<T>({1}, {static_cast<T>(s / n)}, {pred.node(), target.node()}, [n](Node<T>& self) {
    auto& pn = *self.parents[0];
    auto& tn = *self.parents[1];
    const double g = self.grad[0] / n;
    for (std::size_t i = 0; i < pn.value.size(); ++i) {
      const T dlt = pn.value[i] - tn.value[i];
      const double sg = dlt > T(0) ? g : (dlt < T(0) ? -g : 0.0);
      if (pn.requires_grad) detail::grad_buffer(pn)[i] += static_cast<T>(sg);
      if (tn.requires_grad) detail::grad_buffer(tn)[i] -= static_cast<T>(sg);
    }
  });
}

template <class T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
  require_same_shape(a, b, "add");
  std::vector<T> y(a.numel());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = a.values()[i] + b.values()[i];
  return detail::make_result<T>(a.shape(), std::move(y), {a.node(), b.node()}, [](Node<T>& self) {
    for (auto& p : self.parents) {
      if (!p->requires_grad) continue;
      auto& g = detail::grad_buffer(*p);
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
    }
  });
}

template <class T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b) {
  require_same_shape(a, b, "sub");
  std::vector<T> y(a.numel());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = a.values()[i] - b.values()[i];
  return detail::make_result<T>(a.shape(), std::move(y), {a.node(), b.node()}, [](Node<T>& self) {
    if (self.parents[0]->requires_grad) {
      auto& g = detail::grad_buffer(*self.parents[0]);
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
    }
    if (self.parents[1]->requires_grad) {
      auto& g = detail::grad_buffer(*self.parents[1]);
      for (std::size_t i = 0; i < g.size(); ++i) g[i] -= self.grad[i];
    }
  });
}

template <class T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
  require_same_shape(a, b, "mul");
  std::vector<T> y(a.numel());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = a.values()[i] * b.values()[i];
  return detail::make_result<T>(a.shape(), std::move(y), {a.node(), b.node()}, [](Node<T>& self) {
    auto& an = *self.parents[0];
    auto& bn = *self.parents[1];
    if (an.requires_grad) {
      auto& g = detail::grad_buffer(an);
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * bn.value[i];
    }
    if (bn.requires_grad) {
      auto& g = detail::grad_buffer(bn);
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * an.value[i];
    }
  });
}

template <class T>
Tensor<T> scale(const Tensor<T>& x, double c) {
  const T s = static_cast<T>(c);
  return unary(x, [s](T v) { return s * v; }, [s](T) { return s; });
}

template <class T>
Tensor<T> mul_scalar(const Tensor<T>& x, const Tensor<T>& s) {
  require(s.numel() == 1, "mul_scalar expects a single-element scalar");
  const T sv = s.item();
  std::vector<T> y(x.numel());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = x.values()[i] * sv;
  return detail::make_result<T>(x.shape(), std::move(y), {x.node(), s.node()}, [](Node<T>& self) {
    auto& xn = *self.parents[0];
    auto& sn = *self.parents[1];
    if (xn.requires_grad) {
      auto& g = detail::grad_buffer(xn);
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * sn.value[0];
    }
    if (sn.requires_grad) {
      double acc = 0.0;
      for (std::size_t i = 0; i < xn.value.size(); ++i) acc += double(self.grad[i]) * xn.value[i];
      detail::grad_buffer(sn)[0] += static_cast<T>(acc);
    }
  });
}

template <class T>
Tensor<T> div_scalar(const Tensor<T>& x, const Tensor<T>& s) {
  require(s.numel() == 1, "div_scalar expects a single-element scalar");
  const T sv = s.item();
  std::vector<T> y(x.numel());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = x.values()[i] / sv;
  return detail::make_result<T>(x.shape(), std::move(y), {x.node(), s.node()}, [](Node<T>& self) {
    auto& xn = *self.parents[0];
    auto& sn = *self.parents[1];
    const double sv = sn.value[0];
    if (xn.requires_grad) {
      auto& g = detail::grad_buffer(xn);
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += static_cast<T>(self.grad[i] / sv);
    }
    if (sn.requires_grad) {
      double acc = 0.0;
      for (std::size_t i = 0; i < xn.value.size(); ++i) acc += double(self.grad[i]) * xn.value[i];
      detail::grad_buffer(sn)[0] += static_cast<T>(-acc / (sv * sv));
    }
  });
}

template <class T>
Tensor<T> sum(const Tensor<T>& x) {
  double s = 0.0;
  for (T v : x.values()) s += v;
  return detail::make_result<T>({1}, {static_cast<T>(s)}, {x.node()}, [](Node<T>& self) {
    auto& g = detail::grad_buffer(*self.parents[0]);
    for (auto& v : g) v += self.grad[0];
  });
}

template <class T>
Tensor<T> sum_abs(const Tensor<T>& x) {
  double s = 0.0;
  for (T v : x.values()) s += std::abs(double(v));
  return detail::make_result<T>({1}, {static_cast<T>(s)}, {x.node()}, [](Node<T>& self) {
    auto& xn = *self.parents[0];
    auto& g = detail::grad_buffer(xn);
    for (std::size_t i = 0; i < g.size(); ++i) {
      const T v = xn.value[i];
      g[i] += v > T(0) ? self.grad[0] : (v < T(0) ? -self.grad[0] : T(0));
    }
  });
}

template <class T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b) {
  require(a.rank() == 2 && b.rank() == 2 && a.dim(1) == b.dim(0),
          "matmul shapes " + shape_str(a.shape()) + " x " + shape_str(b.shape()));
  const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
  const auto av = a.values(), bv = b.values();
  std::vector<T> y(m * n);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      double s = 0.0;
      for (std::size_t l = 0; l < k; ++l) s += double(av[i * k + l]) * bv[l * n + j];
      y[i * n + j] = static_cast<T>(s);
    }
  return detail::make_result<T>({m, n}, std::move(y), {a.node(), b.node()}, [m, k, n](Node<T>& self) {
    auto& an = *self.parents[0];
    auto& bn = *self.parents[1];
    if (an.requires_grad) {
      auto& g = detail::grad_buffer(an);
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t l = 0; l < k; ++l) {
          double s = 0.0;
          for (std::size_t j = 0; j < n; ++j) s += double(self.grad[i * n + j]) * bn.value[l * n + j];
          g[i * k + l] += static_cast<T>(s);
        }
    }
    if (bn.requires_grad) {
      auto& g = detail::grad_buffer(bn);
      for (std::size_t l = 0; l < k; ++l)
        for (std::size_t j = 0; j < n; ++j) {
          double s = 0.0;
          for (std::size_t i = 0; i < m; ++i) s += double(an.value[i * k + l]) * self.grad[i * n + j];
          g[l * n + j] += static_cast<T>(s);
        }
    }
  });
}

template <class T>
Tensor<T> gather(const Tensor<T>& x, std::vector<std::size_t> index, Shape shape) {
  require(numel(shape) == index.size(), "gather: index count does not match output shape");
  const auto xv = x.values();
  std::vector<T> y(index.size());
  for (std::size_t i = 0; i < index.size(); ++i) {
    require(index[i] < xv.size(), "gather: index out of range");
    y[i] = xv[index[i]];
  }
  return detail::make_result<T>(std::move(shape), std::move(y), {x.node()},
                                [index = std::move(index)](Node<T>& self) {
                                  auto& g = detail::grad_buffer(*self.parents[0]);
                                  for (std::size_t i = 0; i < index.size(); ++i) g[index[i]] += self.grad[i];
                                });
}

template <class T>
Tensor<T> transpose(const Tensor<T>& a) {
  require(a.rank() == 2, "transpose expects a matrix");
  const std::size_t r = a.dim(0), c = a.dim(1);
  std::vector<std::size_t> idx(r * c);
  for (std::size_t i = 0; i < c; ++i)
    for (std::size_t j = 0; j < r; ++j) idx[i * r + j] = j * c + i;
  return gather(a, std::move(idx), {c, r});
}

template <class T>
Tensor<T> reshape(const Tensor<T>& x, Shape shape) {
  require(numel(shape) == x.numel(), "reshape to " + shape_str(shape) + " from " + shape_str(x.shape()));
  std::vector<T> y(x.values().begin(), x.values().end());
  return detail::make_result<T>(std::move(shape), std::move(y), {x.node()}, [](Node<T>& self) {
    auto& g = detail::grad_buffer(*self.parents[0]);
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
  });
}

template <class T>
Tensor<T> concat(const std::vector<Tensor<T>>& parts, Shape shape) {
  std::vector<T> y;
  std::vector<std::shared_ptr<Node<T>>> parents;
  for (const auto& p : parts) {
    y.insert(y.end(), p.values().begin(), p.values().end());
    parents.push_back(p.node());
  }
  require(numel(shape) == y.size(), "concat: total size does not match " + shape_str(shape));
  return detail::make_result<T>(std::move(shape), std::move(y), std::move(parents), [](Node<T>& self) {
    std::size_t offset = 0;
    for (auto& p : self.parents) {
      if (p->requires_grad) {
        auto& g = detail::grad_buffer(*p);
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[offset + i];
      }
      offset += p->value.size();
    }
  });
}

template <class T>
Tensor<T> crop_or_pad(const Tensor<T>& x, std::size_t height, std::size_t width) {
  require(x.rank() == 4, "crop_or_pad expects rank-4 input");
  const std::size_t n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  if (h == height && w == width) return x;
  // Output pixel (i, j) reads input (i + off_h, j + off_w) when in range.
  const long off_h = (static_cast<long>(h) - static_cast<long>(height)) / 2;
  const long off_w = (static_cast<long>(w) - static_cast<long>(width)) / 2;
  std::vector<std::size_t> src_index;
  std::vector<std::size_t> dst_index;
  for (std::size_t p = 0; p < n * c; ++p)
    for (std::size_t i = 0; i < height; ++i)
      for (std::size_t j = 0; j < width; ++j) {
        const long si = static_cast<long>(i) + off_h, sj = static_cast<long>(j) + off_w;
        if (si < 0 || sj < 0 || si >= static_cast<long>(h) || sj >= static_cast<long>(w)) continue;
        src_index.push_back(p * h * w + static_cast<std::size_t>(si) * w + static_cast<std::size_t>(sj));
        dst_index.push_back(p * height * width + i * width + j);
      }
  std::vector<T> y(n * c * height * width, T(0));
  for (std::size_t k = 0; k < src_index.size(); ++k) y[dst_index[k]] = x.values()[src_index[k]];
  return detail::make_result<T>({n, c, height, width}, std::move(y), {x.node()},
                                [src_index = std::move(src_index), dst_index = std::move(dst_index)](Node<T>& self) {
                                  auto& g = detail::grad_buffer(*self.parents[0]);
                                  for (std::size_t k = 0; k < src_index.size(); ++k)
                                    g[src_index[k]] += self.grad[dst_index[k]];
                                });
}

#define QENT_INSTANTIATE_OPS(T)                                                                                    \
  template Tensor<T> batchnorm2d(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, BatchNormState<T>&, bool,   \
                                 double, double);                                                                 \
  template Tensor<T> dropout2d(const Tensor<T>&, double, bool, Rng&);                                              \
  template Tensor<T> leaky_relu(const Tensor<T>&, double);                                                         \
  template Tensor<T> gelu(const Tensor<T>&);                                                                       \
  template Tensor<T> softmax(const Tensor<T>&);                                                                    \
  template Tensor<T> linear(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&);                                 \
  template Tensor<T> l1_loss(const Tensor<T>&, const Tensor<T>&);                                                   \
  template Tensor<T> add(const Tensor<T>&, const Tensor<T>&);                                                      \
  template Tensor<T> sub(const Tensor<T>&, const Tensor<T>&);                                                      \
  template Tensor<T> mul(const Tensor<T>&, const Tensor<T>&);                                                      \
  template Tensor<T> scale(const Tensor<T>&, double);                                                              \
  template Tensor<T> mul_scalar(const Tensor<T>&, const Tensor<T>&);                                               \
  template Tensor<T> div_scalar(const Tensor<T>&, const Tensor<T>&);                                               \
  template Tensor<T> sum(const Tensor<T>&);                                                                        \
  template Tensor<T> sum_abs(const Tensor<T>&);                                                                    \
  template Tensor<T> matmul(const Tensor<T>&, const Tensor<T>&);                                                   \
  template Tensor<T> transpose(const Tensor<T>&);                                                                  \
  template Tensor<T> reshape(const Tensor<T>&, Shape);                                                             \
  template Tensor<T> gather(const Tensor<T>&, std::vector<std::size_t>, Shape);                                    \
  template Tensor<T> concat(const std::vector<Tensor<T>>&, Shape);                                                 \
  template Tensor<T> crop_or_pad(const Tensor<T>&, std::size_t, std::size_t);

QENT_INSTANTIATE_OPS(float)
QENT_INSTANTIATE_OPS(double)

}  // namespace qent::nn
