#include <Eigen/Core>

#include <memory>

#include "qent/nn/ops.hpp"

namespace qent::nn {

namespace {

template <class T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <class T>
using RowMap = Eigen::Map<RowMat<T>>;
template <class T>
using ConstRowMap = Eigen::Map<const RowMat<T>>;

// An image batch (N, C, img_h, img_w) sampled by k x k windows on a
// grid_h x grid_w lattice with the given stride and padding.
struct Patches {
  std::size_t n, channels, img_h, img_w, grid_h, grid_w, kernel, stride, pad;

  std::size_t rows() const { return channels * kernel * kernel; }
  std::size_t cols() const { return n * grid_h * grid_w; }
};

// cols is rows() x cols(), row-major; row (c, kh, kw), column (n, gh, gw).
template <class T>
void im2col(const T* img, const Patches& p, T* cols) {
  const std::size_t ncols = p.cols();
  const std::size_t plane = p.img_h * p.img_w;
  for (std::size_t c = 0; c < p.channels; ++c)
    for (std::size_t kh = 0; kh < p.kernel; ++kh)
      for (std::size_t kw = 0; kw < p.kernel; ++kw) {
        T* dst = cols + ((c * p.kernel + kh) * p.kernel + kw) * ncols;
        for (std::size_t b = 0; b < p.n; ++b) {
          const T* src = img + (b * p.channels + c) * plane;
          for (std::size_t gh = 0; gh < p.grid_h; ++gh) {
            const long ih = static_cast<long>(gh * p.stride + kh) - static_cast<long>(p.pad);
            if (ih < 0 || ih >= static_cast<long>(p.img_h)) {
              std::fill(dst, dst + p.grid_w, T(0));
              dst += p.grid_w;
              continue;
            }
            const T* row = src + static_cast<std::size_t>(ih) * p.img_w;
            for (std::size_t gw = 0; gw < p.grid_w; ++gw) {
              const long iw = static_cast<long>(gw * p.stride + kw) - static_cast<long>(p.pad);
              *dst++ = (iw >= 0 && iw < static_cast<long>(p.img_w)) ? row[iw] : T(0);
            }
          }
        }
      }
}

// Adjoint of im2col: accumulates cols into img.
template <class T>
void col2im(const T* cols, const Patches& p, T* img) {
  const std::size_t ncols = p.cols();
  const std::size_t plane = p.img_h * p.img_w;
  for (std::size_t c = 0; c < p.channels; ++c)
    for (std::size_t kh = 0; kh < p.kernel; ++kh)
      for (std::size_t kw = 0; kw < p.kernel; ++kw) {
        const T* src = cols + ((c * p.kernel + kh) * p.kernel + kw) * ncols;
        for (std::size_t b = 0; b < p.n; ++b) {
          T* dst = img + (b * p.channels + c) * plane;
          for (std::size_t gh = 0; gh < p.grid_h; ++gh) {
            const long ih = static_cast<long>(gh * p.stride + kh) - static_cast<long>(p.pad);
            if (ih < 0 || ih >= static_cast<long>(p.img_h)) {
              src += p.grid_w;
              continue;
            }
            T* row = dst + static_cast<std::size_t>(ih) * p.img_w;
            for (std::size_t gw = 0; gw < p.grid_w; ++gw, ++src) {
              const long iw = static_cast<long>(gw * p.stride + kw) - static_cast<long>(p.pad);
              if (iw >= 0 && iw < static_cast<long>(p.img_w)) row[iw] += *src;
            }
          }
        }
      }
}

// (N, C, S) <-> C x (N*S) row-major.
template <class T>
void batch_to_channel_major(const T* x, std::size_t n, std::size_t c, std::size_t s, T* out) {
  for (std::size_t b = 0; b < n; ++b)
    for (std::size_t ch = 0; ch < c; ++ch) std::copy_n(x + (b * c + ch) * s, s, out + ch * n * s + b * s);
}

template <class T>
void channel_major_to_batch_add(const T* m, std::size_t n, std::size_t c, std::size_t s, T* out) {
  for (std::size_t b = 0; b < n; ++b)
    for (std::size_t ch = 0; ch < c; ++ch) {
      const T* src = m + ch * n * s + b * s;
      T* dst = out + (b * c + ch) * s;
      for (std::size_t i = 0; i < s; ++i) dst[i] += src[i];
    }
}

void require(bool ok, const std::string& what) {
  if (!ok) throw Error(ErrorCode::ShapeMismatch, what);
}

}  // namespace

std::size_t conv_output_size(std::size_t in, std::size_t kernel, const Conv2dGeometry& g) {
  const long span = static_cast<long>(in + 2 * g.padding) - static_cast<long>(kernel);
  if (span < 0 || g.stride == 0) return 0;
  return static_cast<std::size_t>(span) / g.stride + 1;
}

std::size_t conv_transpose_output_size(std::size_t in, std::size_t kernel, const Conv2dGeometry& g) {
  if (in == 0) return 0;
  const long out = static_cast<long>((in - 1) * g.stride + kernel + g.output_padding) - 2 * static_cast<long>(g.padding);
  return out > 0 ? static_cast<std::size_t>(out) : 0;
}

template <class T>
Tensor<T> conv2d(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>& bias, const Conv2dGeometry& g) {
  require(x.rank() == 4 && weight.rank() == 4, "conv2d expects rank-4 input and weight");
  const std::size_t n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  const std::size_t o = weight.dim(0), k = weight.dim(2);
  require(weight.dim(1) == c, "conv2d channel mismatch: input " + shape_str(x.shape()) + ", weight " +
                                  shape_str(weight.shape()));
  require(weight.dim(3) == k && bias.numel() == o, "conv2d weight/bias shape");
  require(g.stride >= 1, "conv2d stride must be >= 1");
  const std::size_t ho = conv_output_size(h, k, g), wo = conv_output_size(w, k, g);
  require(ho > 0 && wo > 0, "conv2d kernel larger than padded input");

  const Patches p{n, c, h, w, ho, wo, k, g.stride, g.padding};
  const std::size_t kk = p.rows(), np = p.cols(), hw = ho * wo;
  std::vector<T> cols(kk * np);
  im2col(x.values().data(), p, cols.data());

  RowMat<T> out = ConstRowMap<T>(weight.values().data(), o, kk) * ConstRowMap<T>(cols.data(), kk, np);
  std::vector<T> y(n * o * hw);
  const auto b = bias.values();
  for (std::size_t bi = 0; bi < n; ++bi)
    for (std::size_t oc = 0; oc < o; ++oc) {
      const T* src = out.data() + oc * np + bi * hw;
      T* dst = y.data() + (bi * o + oc) * hw;
      for (std::size_t s = 0; s < hw; ++s) dst[s] = src[s] + b[oc];
    }

  return detail::make_result<T>(
      {n, o, ho, wo}, std::move(y), {x.node(), weight.node(), bias.node()},
      [p, o, cols = std::move(cols)](Node<T>& self) {
        auto& xn = *self.parents[0];
        auto& wn = *self.parents[1];
        auto& bn = *self.parents[2];
        const std::size_t kk = p.rows(), np = p.cols(), hw = p.grid_h * p.grid_w;
        RowMat<T> dout(o, np);
        batch_to_channel_major(self.grad.data(), p.n, o, hw, dout.data());
        if (wn.requires_grad) {
          RowMap<T>(detail::grad_buffer(wn).data(), o, kk).noalias() +=
              dout * ConstRowMap<T>(cols.data(), kk, np).transpose();
        }
        if (bn.requires_grad) {
          auto& gb = detail::grad_buffer(bn);
          for (std::size_t oc = 0; oc < o; ++oc) gb[oc] += dout.row(oc).sum();
        }
        if (xn.requires_grad) {
          RowMat<T> dcols = ConstRowMap<T>(wn.value.data(), o, kk).transpose() * dout;
          col2im(dcols.data(), p, detail::grad_buffer(xn).data());
        }
      });
}

template <class T>
Tensor<T> conv_transpose2d(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>& bias,
                           const Conv2dGeometry& g) {
  require(x.rank() == 4 && weight.rank() == 4, "conv_transpose2d expects rank-4 input and weight");
  const std::size_t n = x.dim(0), cin = x.dim(1), h = x.dim(2), w = x.dim(3);
  const std::size_t cout = weight.dim(1), k = weight.dim(2);
  require(weight.dim(0) == cin, "conv_transpose2d channel mismatch: input " + shape_str(x.shape()) + ", weight " +
                                    shape_str(weight.shape()));
  require(weight.dim(3) == k && bias.numel() == cout, "conv_transpose2d weight/bias shape");
  require(g.stride >= 1 && g.output_padding < g.stride, "conv_transpose2d needs output_padding < stride");
  const std::size_t ho = conv_transpose_output_size(h, k, g), wo = conv_transpose_output_size(w, k, g);
  require(ho > 0 && wo > 0, "conv_transpose2d output would be empty");

  // The output plays the role of the image, the input is the patch grid.
  const Patches p{n, cout, ho, wo, h, w, k, g.stride, g.padding};
  const std::size_t kk = p.rows(), np = p.cols(), hw = h * w;
  std::vector<T> xm(cin * np);
  batch_to_channel_major(x.values().data(), n, cin, hw, xm.data());
  RowMat<T> cols = ConstRowMap<T>(weight.values().data(), cin, kk).transpose() * ConstRowMap<T>(xm.data(), cin, np);

  std::vector<T> y(n * cout * ho * wo, T(0));
  col2im(cols.data(), p, y.data());
  const auto b = bias.values();
  const std::size_t plane = ho * wo;
  for (std::size_t bi = 0; bi < n; ++bi)
    for (std::size_t oc = 0; oc < cout; ++oc) {
      T* dst = y.data() + (bi * cout + oc) * plane;
      for (std::size_t s = 0; s < plane; ++s) dst[s] += b[oc];
    }

  return detail::make_result<T>(
      {n, cout, ho, wo}, std::move(y), {x.node(), weight.node(), bias.node()},
      [p, cin, xm = std::move(xm)](Node<T>& self) {
        auto& xn = *self.parents[0];
        auto& wn = *self.parents[1];
        auto& bn = *self.parents[2];
        const std::size_t kk = p.rows(), np = p.cols(), plane = p.img_h * p.img_w;
        if (bn.requires_grad) {
          auto& gb = detail::grad_buffer(bn);
          for (std::size_t bi = 0; bi < p.n; ++bi)
            for (std::size_t oc = 0; oc < p.channels; ++oc) {
              const T* src = self.grad.data() + (bi * p.channels + oc) * plane;
              T acc = T(0);
              for (std::size_t s = 0; s < plane; ++s) acc += src[s];
              gb[oc] += acc;
            }
        }
        if (!wn.requires_grad && !xn.requires_grad) return;
        RowMat<T> dcols(kk, np);
        im2col(self.grad.data(), p, dcols.data());
        if (wn.requires_grad) {
          RowMap<T>(detail::grad_buffer(wn).data(), cin, kk).noalias() +=
              ConstRowMap<T>(xm.data(), cin, np) * dcols.transpose();
        }
        if (xn.requires_grad) {
          RowMat<T> dx = ConstRowMap<T>(wn.value.data(), cin, kk) * dcols;
          channel_major_to_batch_add(dx.data(), p.n, cin, p.grid_h * p.grid_w, detail::grad_buffer(xn).data());
        }
      });
}

template Tensor<float> conv2d(const Tensor<float>&, const Tensor<float>&, const Tensor<float>&,
                              const Conv2dGeometry&);
template Tensor<double> conv2d(const Tensor<double>&, const Tensor<double>&, const Tensor<double>&,
                               const Conv2dGeometry&);
template Tensor<float> conv_transpose2d(const Tensor<float>&, const Tensor<float>&, const Tensor<float>&,
                                        const Conv2dGeometry&);
template Tensor<double> conv_transpose2d(const Tensor<double>&, const Tensor<double>&, const Tensor<double>&,
                                         const Conv2dGeometry&);

}  // namespace qent::nn
