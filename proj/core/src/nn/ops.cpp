#include "dpaf/nn/ops.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <limits>

namespace dpaf::nn {
namespace {

template <typename T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MatMap = Eigen::Map<RowMat<T>>;
template <typename T>
using ConstMatMap = Eigen::Map<const RowMat<T>>;
template <typename T>
using ConstRowVec = Eigen::Map<const Eigen::Matrix<T, 1, Eigen::Dynamic>>;

struct ConvDims {
  std::size_t n, c, h, w, o, k, ho, wo;
  std::size_t cols() const { return c * k * k; }
  std::size_t positions() const { return ho * wo; }
  bool pointwise(ConvGeometry g) const { return k == 1 && g.stride == 1 && g.padding == 0; }
};

template <typename T>
ConvDims check_conv(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>& bias,
                    ConvGeometry g) {
  if (x.rank() != 4 || weight.rank() != 4) throw ShapeError("conv2d: expected rank-4 tensors");
  if (g.stride == 0) throw ParameterError("conv2d: stride must be >= 1");
  if (weight.dim(1) != x.dim(1)) {
    throw ShapeError("conv2d: input has " + std::to_string(x.dim(1)) +
                     " channels, weight expects " + std::to_string(weight.dim(1)));
  }
  if (weight.dim(2) != weight.dim(3)) throw ShapeError("conv2d: kernel must be square");
  if (!bias.empty() && bias.size() != weight.dim(0)) throw ShapeError("conv2d: bias length");
  const std::size_t k = weight.dim(2);
  if (x.dim(2) + 2 * g.padding < k || x.dim(3) + 2 * g.padding < k) {
    throw ShapeError("conv2d: kernel larger than padded input " + shape_string(x.shape()));
  }
  return {x.dim(0), x.dim(1), x.dim(2), x.dim(3), weight.dim(0), k,
          conv_output_size(x.dim(2), k, g), conv_output_size(x.dim(3), k, g)};
}

// Output columns [lo, hi) read inside the input row for kernel offset kx.
struct ColumnRange {
  std::size_t lo, hi;
};

inline ColumnRange valid_columns(const ConvDims& d, ConvGeometry g, std::size_t kx) {
  const auto pad = static_cast<std::ptrdiff_t>(g.padding);
  const auto stride = static_cast<std::ptrdiff_t>(g.stride);
  const auto off = static_cast<std::ptrdiff_t>(kx) - pad;  // ix = ox * stride + off
  const auto wo = static_cast<std::ptrdiff_t>(d.wo), w = static_cast<std::ptrdiff_t>(d.w);
  std::ptrdiff_t lo = off >= 0 ? 0 : (-off + stride - 1) / stride;
  std::ptrdiff_t hi = off >= w ? 0 : (w - 1 - off) / stride + 1;
  lo = std::min(lo, wo);
  hi = std::clamp(hi, lo, wo);
  return {static_cast<std::size_t>(lo), static_cast<std::size_t>(hi)};
}

template <typename T>
void im2col(const T* src, const ConvDims& d, ConvGeometry g, T* cols) {
  const std::size_t p_count = d.positions();
  const auto pad = static_cast<std::ptrdiff_t>(g.padding);
  const std::size_t stride = g.stride;
  for (std::size_t c = 0; c < d.c; ++c) {
    const T* plane = src + c * d.h * d.w;
    for (std::size_t ky = 0; ky < d.k; ++ky) {
      for (std::size_t kx = 0; kx < d.k; ++kx) {
        T* dst = cols + ((c * d.k + ky) * d.k + kx) * p_count;
        const ColumnRange r = valid_columns(d, g, kx);
        const std::ptrdiff_t off = static_cast<std::ptrdiff_t>(kx) - pad;
        for (std::size_t oy = 0; oy < d.ho; ++oy) {
          const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy * stride + ky) - pad;
          T* row = dst + oy * d.wo;
          if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(d.h)) {
            std::fill_n(row, d.wo, T(0));
            continue;
          }
          const T* line = plane + iy * static_cast<std::ptrdiff_t>(d.w) + off;
          std::fill(row, row + r.lo, T(0));
          if (stride == 1) {
            std::copy(line + r.lo, line + r.hi, row + r.lo);
          } else {
            for (std::size_t ox = r.lo; ox < r.hi; ++ox) row[ox] = line[ox * stride];
          }
          std::fill(row + r.hi, row + d.wo, T(0));
        }
      }
    }
  }
}

template <typename T>
void col2im_add(const T* cols, const ConvDims& d, ConvGeometry g, T* dst) {
  const std::size_t p_count = d.positions();
  const auto pad = static_cast<std::ptrdiff_t>(g.padding);
  const std::size_t stride = g.stride;
  for (std::size_t c = 0; c < d.c; ++c) {
    T* plane = dst + c * d.h * d.w;
    for (std::size_t ky = 0; ky < d.k; ++ky) {
      for (std::size_t kx = 0; kx < d.k; ++kx) {
        const T* src = cols + ((c * d.k + ky) * d.k + kx) * p_count;
        const ColumnRange r = valid_columns(d, g, kx);
        const std::ptrdiff_t off = static_cast<std::ptrdiff_t>(kx) - pad;
        for (std::size_t oy = 0; oy < d.ho; ++oy) {
          const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy * stride + ky) - pad;
          if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(d.h)) continue;
          T* line = plane + iy * static_cast<std::ptrdiff_t>(d.w) + off;
          const T* row = src + oy * d.wo;
          if (stride == 1) {
            for (std::size_t ox = r.lo; ox < r.hi; ++ox) line[ox] += row[ox];
          } else {
            for (std::size_t ox = r.lo; ox < r.hi; ++ox) line[ox * stride] += row[ox];
          }
        }
      }
    }
  }
}

}  // namespace

std::size_t conv_output_size(std::size_t in, std::size_t kernel, ConvGeometry g) {
  return (in + 2 * g.padding - kernel) / g.stride + 1;
}

template <typename T>
Tensor<T> conv2d(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>& bias,
                 ConvGeometry g) {
  const ConvDims d = check_conv(x, weight, bias, g);
  Tensor<T> out({d.n, d.o, d.ho, d.wo});
  const std::size_t kc = d.cols(), p = d.positions();
  std::vector<T> cols(d.pointwise(g) ? 0 : kc * p);
  ConstMatMap<T> w(weight.data(), d.o, kc);
  for (std::size_t n = 0; n < d.n; ++n) {
    const T* src = x.data() + n * d.c * d.h * d.w;
    if (!d.pointwise(g)) im2col(src, d, g, cols.data());
    ConstMatMap<T> col(d.pointwise(g) ? src : cols.data(), kc, p);
    MatMap<T> y(out.data() + n * d.o * p, d.o, p);
    y.noalias() = w * col;
    if (!bias.empty()) {
      for (std::size_t o = 0; o < d.o; ++o) y.row(o).array() += bias[o];
    }
  }
  return out;
}

template <typename T>
void conv2d_backward(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>& dy,
                     ConvGeometry g, Tensor<T>* dx, Tensor<T>* dweight, Tensor<T>* dbias) {
  const ConvDims d = check_conv(x, weight, Tensor<T>{}, g);
  if (dy.shape() != Shape{d.n, d.o, d.ho, d.wo}) throw ShapeError("conv2d_backward: dy shape");
  const std::size_t kc = d.cols(), p = d.positions();
  const bool pointwise = d.pointwise(g);
  std::vector<T> cols(pointwise ? 0 : kc * p);
  std::vector<T> dcols(dx && !pointwise ? kc * p : 0);
  ConstMatMap<T> w(weight.data(), d.o, kc);
  if (dx) *dx = Tensor<T>(x.shape());
  for (std::size_t n = 0; n < d.n; ++n) {
    const T* src = x.data() + n * d.c * d.h * d.w;
    ConstMatMap<T> g_out(dy.data() + n * d.o * p, d.o, p);
    if (dweight) {
      if (!pointwise) im2col(src, d, g, cols.data());
      ConstMatMap<T> col(pointwise ? src : cols.data(), kc, p);
      MatMap<T> dw(dweight->data(), d.o, kc);
      dw.noalias() += g_out * col.transpose();
    }
    if (dbias) {
      for (std::size_t o = 0; o < d.o; ++o) {
        // Sequential sums keep results independent of buffer alignment.
        T acc = 0;
        for (std::size_t i = 0; i < p; ++i) acc += g_out(o, i);
        (*dbias)[o] += acc;
      }
    }
    if (dx) {
      T* dst = dx->data() + n * d.c * d.h * d.w;
      if (pointwise) {
        MatMap<T> dcol(dst, kc, p);
        dcol.noalias() = w.transpose() * g_out;
      } else {
        MatMap<T> dcol(dcols.data(), kc, p);
        dcol.noalias() = w.transpose() * g_out;
        col2im_add(dcols.data(), d, g, dst);
      }
    }
  }
}

template <typename T>
Tensor<T> relu(const Tensor<T>& x) {
  Tensor<T> y(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] > T(0) ? x[i] : T(0);
  return y;
}

template <typename T>
Tensor<T> relu_backward(const Tensor<T>& x, const Tensor<T>& dy) {
  require_same_shape(x, dy, "relu_backward");
  Tensor<T> dx(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) dx[i] = x[i] > T(0) ? dy[i] : T(0);
  return dx;
}

template <typename T>
Tensor<T> gelu(const Tensor<T>& x) {
  Tensor<T> y(x.shape());
  const T a = static_cast<T>(kGeluSqrt2OverPi), b = static_cast<T>(kGeluCubic);
  for (std::size_t i = 0; i < x.size(); ++i) {
    const T v = x[i];
    y[i] = T(0.5) * v * (T(1) + std::tanh(a * (v + b * v * v * v)));
  }
  return y;
}

template <typename T>
Tensor<T> gelu_backward(const Tensor<T>& x, const Tensor<T>& dy) {
  require_same_shape(x, dy, "gelu_backward");
  Tensor<T> dx(x.shape());
  const T a = static_cast<T>(kGeluSqrt2OverPi), b = static_cast<T>(kGeluCubic);
  for (std::size_t i = 0; i < x.size(); ++i) {
    const T v = x[i];
    const T t = std::tanh(a * (v + b * v * v * v));
    const T deriv = T(0.5) * (T(1) + t) + T(0.5) * v * (T(1) - t * t) * a * (T(1) + T(3) * b * v * v);
    dx[i] = dy[i] * deriv;
  }
  return dx;
}

namespace {

struct Tap {
  std::size_t i0, i1;
  double w1;  // weight of i1; i0 gets 1 - w1
};

std::vector<Tap> upsample_taps(std::size_t in) {
  std::vector<Tap> taps(2 * in);
  for (std::size_t o = 0; o < 2 * in; ++o) {
    double src = (static_cast<double>(o) + 0.5) / 2.0 - 0.5;
    if (src < 0) src = 0;
    const auto i0 = static_cast<std::size_t>(src);
    const std::size_t i1 = std::min(i0 + 1, in - 1);
    taps[o] = {i0, i1, src - static_cast<double>(i0)};
  }
  return taps;
}

}  // namespace

template <typename T>
Tensor<T> upsample_bilinear2x(const Tensor<T>& x) {
  if (x.rank() != 4) throw ShapeError("upsample_bilinear2x: expected NCHW");
  const std::size_t planes = x.dim(0) * x.dim(1), h = x.dim(2), w = x.dim(3);
  const auto ty = upsample_taps(h), tx = upsample_taps(w);
  Tensor<T> y({x.dim(0), x.dim(1), 2 * h, 2 * w});
  for (std::size_t p = 0; p < planes; ++p) {
    const T* src = x.data() + p * h * w;
    T* dst = y.data() + p * 4 * h * w;
    for (std::size_t oy = 0; oy < 2 * h; ++oy) {
      const T wy1 = static_cast<T>(ty[oy].w1), wy0 = T(1) - wy1;
      const T* r0 = src + ty[oy].i0 * w;
      const T* r1 = src + ty[oy].i1 * w;
      for (std::size_t ox = 0; ox < 2 * w; ++ox) {
        const T wx1 = static_cast<T>(tx[ox].w1), wx0 = T(1) - wx1;
        dst[oy * 2 * w + ox] = wy0 * (wx0 * r0[tx[ox].i0] + wx1 * r0[tx[ox].i1]) +
                               wy1 * (wx0 * r1[tx[ox].i0] + wx1 * r1[tx[ox].i1]);
      }
    }
  }
  return y;
}

template <typename T>
Tensor<T> upsample_bilinear2x_backward(const Shape& input_shape, const Tensor<T>& dy) {
  if (input_shape.size() != 4) throw ShapeError("upsample_bilinear2x_backward: expected NCHW");
  const std::size_t h = input_shape[2], w = input_shape[3];
  if (dy.shape() != Shape{input_shape[0], input_shape[1], 2 * h, 2 * w}) {
    throw ShapeError("upsample_bilinear2x_backward: dy shape");
  }
  const std::size_t planes = input_shape[0] * input_shape[1];
  const auto ty = upsample_taps(h), tx = upsample_taps(w);
  Tensor<T> dx(input_shape);
  for (std::size_t p = 0; p < planes; ++p) {
    const T* g = dy.data() + p * 4 * h * w;
    T* dst = dx.data() + p * h * w;
    for (std::size_t oy = 0; oy < 2 * h; ++oy) {
      const T wy1 = static_cast<T>(ty[oy].w1), wy0 = T(1) - wy1;
      T* r0 = dst + ty[oy].i0 * w;
      T* r1 = dst + ty[oy].i1 * w;
      for (std::size_t ox = 0; ox < 2 * w; ++ox) {
        const T wx1 = static_cast<T>(tx[ox].w1), wx0 = T(1) - wx1;
        const T v = g[oy * 2 * w + ox];
        r0[tx[ox].i0] += wy0 * wx0 * v;
        r0[tx[ox].i1] += wy0 * wx1 * v;
        r1[tx[ox].i0] += wy1 * wx0 * v;
        r1[tx[ox].i1] += wy1 * wx1 * v;
      }
    }
  }
  return dx;
}

template <typename T>
Tensor<T> linear(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>& bias) {
  if (x.rank() < 1 || weight.rank() != 2 || x.shape().back() != weight.dim(1)) {
    throw ShapeError("linear: input " + shape_string(x.shape()) + " vs weight " +
                     shape_string(weight.shape()));
  }
  if (!bias.empty() && bias.size() != weight.dim(0)) throw ShapeError("linear: bias length");
  const std::size_t in = weight.dim(1), out_dim = weight.dim(0), rows = x.size() / in;
  Shape out_shape = x.shape();
  out_shape.back() = out_dim;
  Tensor<T> y(out_shape);
  ConstMatMap<T> xm(x.data(), rows, in);
  ConstMatMap<T> wm(weight.data(), out_dim, in);
  MatMap<T> ym(y.data(), rows, out_dim);
  ym.noalias() = xm * wm.transpose();
  if (!bias.empty()) ym.rowwise() += ConstRowVec<T>(bias.data(), out_dim);
  return y;
}

template <typename T>
void linear_backward(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>& dy,
                     Tensor<T>* dx, Tensor<T>* dweight, Tensor<T>* dbias) {
  const std::size_t in = weight.dim(1), out_dim = weight.dim(0), rows = x.size() / in;
  if (dy.size() != rows * out_dim) throw ShapeError("linear_backward: dy shape");
  ConstMatMap<T> xm(x.data(), rows, in);
  ConstMatMap<T> wm(weight.data(), out_dim, in);
  ConstMatMap<T> gm(dy.data(), rows, out_dim);
  if (dx) {
    *dx = Tensor<T>(x.shape());
    MatMap<T> dxm(dx->data(), rows, in);
    dxm.noalias() = gm * wm;
  }
  if (dweight) {
    MatMap<T> dwm(dweight->data(), out_dim, in);
    dwm.noalias() += gm.transpose() * xm;
  }
  if (dbias) {
    for (std::size_t o = 0; o < out_dim; ++o) {
      T acc = 0;
      for (std::size_t r = 0; r < rows; ++r) acc += gm(r, o);
      (*dbias)[o] += acc;
    }
  }
}

template <typename T>
Tensor<T> layer_norm(const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& beta, T eps,
                     LayerNormStats<T>* stats) {
  const std::size_t d = gamma.size();
  if (x.rank() < 1 || x.shape().back() != d || beta.size() != d) {
    throw ShapeError("layer_norm: feature size mismatch");
  }
  const std::size_t rows = x.size() / d;
  Tensor<T> y(x.shape());
  if (stats) {
    stats->mean.assign(rows, T(0));
    stats->rstd.assign(rows, T(0));
  }
  for (std::size_t r = 0; r < rows; ++r) {
    const T* xr = x.data() + r * d;
    T mean = 0;
    for (std::size_t i = 0; i < d; ++i) mean += xr[i];
    mean /= static_cast<T>(d);
    T var = 0;
    for (std::size_t i = 0; i < d; ++i) var += (xr[i] - mean) * (xr[i] - mean);
    var /= static_cast<T>(d);
    const T rstd = T(1) / std::sqrt(var + eps);
    T* yr = y.data() + r * d;
    for (std::size_t i = 0; i < d; ++i) yr[i] = gamma[i] * (xr[i] - mean) * rstd + beta[i];
    if (stats) {
      stats->mean[r] = mean;
      stats->rstd[r] = rstd;
    }
  }
  return y;
}

template <typename T>
Tensor<T> layer_norm_backward(const Tensor<T>& x, const Tensor<T>& gamma,
                              const LayerNormStats<T>& stats, const Tensor<T>& dy,
                              Tensor<T>* dgamma, Tensor<T>* dbeta) {
  require_same_shape(x, dy, "layer_norm_backward");
  const std::size_t d = gamma.size(), rows = x.size() / d;
  Tensor<T> dx(x.shape());
  std::vector<T> xhat(d), dxhat(d);
  for (std::size_t r = 0; r < rows; ++r) {
    const T* xr = x.data() + r * d;
    const T* gr = dy.data() + r * d;
    T sum_d = 0, sum_dx = 0;
    for (std::size_t i = 0; i < d; ++i) {
      xhat[i] = (xr[i] - stats.mean[r]) * stats.rstd[r];
      dxhat[i] = gr[i] * gamma[i];
      sum_d += dxhat[i];
      sum_dx += dxhat[i] * xhat[i];
      if (dgamma) (*dgamma)[i] += gr[i] * xhat[i];
      if (dbeta) (*dbeta)[i] += gr[i];
    }
    const T inv_d = T(1) / static_cast<T>(d);
    T* dxr = dx.data() + r * d;
    for (std::size_t i = 0; i < d; ++i) {
      dxr[i] = stats.rstd[r] * (dxhat[i] - inv_d * sum_d - xhat[i] * inv_d * sum_dx);
    }
  }
  return dx;
}

template <typename T>
Tensor<T> scaled_dot_attention(const Tensor<T>& q, const Tensor<T>& k, const Tensor<T>& v,
                               Tensor<T>* probs) {
  if (q.rank() != 2 || k.rank() != 2 || v.rank() != 2) {
    throw ShapeError("scaled_dot_attention: expected rank-2 Q, K, V");
  }
  if (q.dim(1) != k.dim(1)) throw ShapeError("scaled_dot_attention: Q and K widths differ");
  if (k.dim(0) != v.dim(0)) throw ShapeError("scaled_dot_attention: K and V token counts differ");
  const std::size_t n = q.dim(0), m = k.dim(0), dk = q.dim(1), dv = v.dim(1);
  const T scale_factor = T(1) / std::sqrt(static_cast<T>(dk));
  RowMat<T> s = (ConstMatMap<T>(q.data(), n, dk) * ConstMatMap<T>(k.data(), m, dk).transpose()) *
                scale_factor;
  for (std::size_t i = 0; i < n; ++i) {
    const T row_max = s.row(i).maxCoeff();
    T total = 0;
    for (std::size_t j = 0; j < m; ++j) {
      s(i, j) = std::exp(s(i, j) - row_max);
      total += s(i, j);
    }
    s.row(i) /= total;
  }
  Tensor<T> out({n, dv});
  MatMap<T>(out.data(), n, dv).noalias() = s * ConstMatMap<T>(v.data(), m, dv);
  if (probs) {
    *probs = Tensor<T>({n, m});
    MatMap<T>(probs->data(), n, m) = s;
  }
  return out;
}

template <typename T>
void scaled_dot_attention_backward(const Tensor<T>& q, const Tensor<T>& k, const Tensor<T>& v,
                                   const Tensor<T>& probs, const Tensor<T>& dy, Tensor<T>& dq,
                                   Tensor<T>& dk, Tensor<T>& dv) {
  const std::size_t n = q.dim(0), m = k.dim(0), dkw = q.dim(1), dvw = v.dim(1);
  const T scale_factor = T(1) / std::sqrt(static_cast<T>(dkw));
  ConstMatMap<T> p(probs.data(), n, m);
  ConstMatMap<T> g(dy.data(), n, dvw);
  dv = Tensor<T>({m, dvw});
  MatMap<T>(dv.data(), m, dvw).noalias() = p.transpose() * g;
  RowMat<T> dp = g * ConstMatMap<T>(v.data(), m, dvw).transpose();
  for (std::size_t i = 0; i < n; ++i) {
    T inner = 0;
    for (std::size_t j = 0; j < m; ++j) inner += dp(i, j) * p(i, j);
    for (std::size_t j = 0; j < m; ++j) dp(i, j) = p(i, j) * (dp(i, j) - inner);
  }
  dq = Tensor<T>({n, dkw});
  dk = Tensor<T>({m, dkw});
  MatMap<T>(dq.data(), n, dkw).noalias() = (dp * ConstMatMap<T>(k.data(), m, dkw)) * scale_factor;
  MatMap<T>(dk.data(), m, dkw).noalias() =
      (dp.transpose() * ConstMatMap<T>(q.data(), n, dkw)) * scale_factor;
}

template <typename T>
Tensor<T> max_pool2x2(const Tensor<T>& x, std::vector<std::size_t>* argmax) {
  if (x.rank() != 4 || x.dim(2) < 2 || x.dim(3) < 2) throw ShapeError("max_pool2x2: input too small");
  const std::size_t planes = x.dim(0) * x.dim(1), h = x.dim(2), w = x.dim(3);
  const std::size_t ho = h / 2, wo = w / 2;
  Tensor<T> y({x.dim(0), x.dim(1), ho, wo});
  if (argmax) argmax->assign(y.size(), 0);
  for (std::size_t p = 0; p < planes; ++p) {
    for (std::size_t oy = 0; oy < ho; ++oy) {
      for (std::size_t ox = 0; ox < wo; ++ox) {
        std::size_t best = p * h * w + (2 * oy) * w + 2 * ox;
        for (std::size_t dy = 0; dy < 2; ++dy) {
          for (std::size_t dx = 0; dx < 2; ++dx) {
            const std::size_t idx = p * h * w + (2 * oy + dy) * w + 2 * ox + dx;
            if (x[idx] > x[best]) best = idx;
          }
        }
        const std::size_t o = (p * ho + oy) * wo + ox;
        y[o] = x[best];
        if (argmax) (*argmax)[o] = best;
      }
    }
  }
  return y;
}

template <typename T>
Tensor<T> max_pool2x2_backward(const Shape& input_shape, const std::vector<std::size_t>& argmax,
                               const Tensor<T>& dy) {
  if (argmax.size() != dy.size()) throw ShapeError("max_pool2x2_backward: argmax size");
  Tensor<T> dx(input_shape);
  for (std::size_t i = 0; i < dy.size(); ++i) dx[argmax[i]] += dy[i];
  return dx;
}

template <typename T>
T sigmoid(T x) {
  if (x >= T(0)) return T(1) / (T(1) + std::exp(-x));
  const T e = std::exp(x);
  return e / (T(1) + e);
}

#define DPAF_INSTANTIATE(T)                                                                     \
  template Tensor<T> conv2d(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, ConvGeometry); \
  template void conv2d_backward(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&,            \
                                ConvGeometry, Tensor<T>*, Tensor<T>*, Tensor<T>*);               \
  template Tensor<T> relu(const Tensor<T>&);                                                    \
  template Tensor<T> relu_backward(const Tensor<T>&, const Tensor<T>&);                         \
  template Tensor<T> gelu(const Tensor<T>&);                                                    \
  template Tensor<T> gelu_backward(const Tensor<T>&, const Tensor<T>&);                         \
  template Tensor<T> upsample_bilinear2x(const Tensor<T>&);                                     \
  template Tensor<T> upsample_bilinear2x_backward(const Shape&, const Tensor<T>&);              \
  template Tensor<T> linear(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&);              \
  template void linear_backward(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&,           \
                                Tensor<T>*, Tensor<T>*, Tensor<T>*);                            \
  template struct LayerNormStats<T>;                                                            \
  template Tensor<T> layer_norm(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, T,        \
                                LayerNormStats<T>*);                                            \
  template Tensor<T> layer_norm_backward(const Tensor<T>&, const Tensor<T>&,                    \
                                         const LayerNormStats<T>&, const Tensor<T>&, Tensor<T>*, \
                                         Tensor<T>*);                                           \
  template Tensor<T> scaled_dot_attention(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, \
                                          Tensor<T>*);                                          \
  template void scaled_dot_attention_backward(const Tensor<T>&, const Tensor<T>&,               \
                                              const Tensor<T>&, const Tensor<T>&,               \
                                              const Tensor<T>&, Tensor<T>&, Tensor<T>&,         \
                                              Tensor<T>&);                                      \
  template Tensor<T> max_pool2x2(const Tensor<T>&, std::vector<std::size_t>*);                  \
  template Tensor<T> max_pool2x2_backward(const Shape&, const std::vector<std::size_t>&,        \
                                          const Tensor<T>&);                                    \
  template T sigmoid(T);

DPAF_INSTANTIATE(float)
DPAF_INSTANTIATE(double)
#undef DPAF_INSTANTIATE

}  // namespace dpaf::nn
