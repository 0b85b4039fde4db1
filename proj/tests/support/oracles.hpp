#pragma once

// Independent reference implementations used by the tests. Everything here
// is written as plain nested loops over doubles so it shares no code with
// the library it checks.

#include <cmath>
#include <cstdint>
#include <vector>

#include "dpaf/rng.hpp"
#include "dpaf/tensor.hpp"

namespace dpaf::oracle {

template <typename T = double>
Tensor<T> random_tensor(Shape shape, std::uint64_t seed, double lo = -1.0, double hi = 1.0) {
  Tensor<T> t(std::move(shape));
  Rng rng(seed);
  for (auto& v : t.values()) v = static_cast<T>(rng.uniform(lo, hi));
  return t;
}

inline double max_abs_diff(const Tensor<double>& a, const Tensor<double>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

/// Direct cross-correlation, NCHW input and OCkk weight.
inline Tensor<double> naive_conv2d(const Tensor<double>& x, const Tensor<double>& w, const Tensor<double>& b,
                                   std::size_t stride, std::size_t pad) {
  const std::size_t n = x.dim(0), c = x.dim(1), h = x.dim(2), wd = x.dim(3);
  const std::size_t o = w.dim(0), k = w.dim(2);
  const std::size_t oh = (h + 2 * pad - k) / stride + 1, ow = (wd + 2 * pad - k) / stride + 1;
  Tensor<double> y({n, o, oh, ow});
  for (std::size_t in = 0; in < n; ++in)
    for (std::size_t io = 0; io < o; ++io)
      for (std::size_t i = 0; i < oh; ++i)
        for (std::size_t j = 0; j < ow; ++j) {
          double acc = b.empty() ? 0.0 : b[io];
          for (std::size_t ic = 0; ic < c; ++ic)
            for (std::size_t ki = 0; ki < k; ++ki)
              for (std::size_t kj = 0; kj < k; ++kj) {
                const long r = static_cast<long>(i * stride + ki) - static_cast<long>(pad);
                const long s = static_cast<long>(j * stride + kj) - static_cast<long>(pad);
                if (r < 0 || s < 0 || r >= static_cast<long>(h) || s >= static_cast<long>(wd)) continue;
                acc += x.at(in, ic, r, s) * w.at(io, ic, ki, kj);
              }
          y.at(in, io, i, j) = acc;
        }
  return y;
}

/// Row-wise softmax(Q K^T / sqrt(d)) V on rank-2 tensors.
inline Tensor<double> naive_attention(const Tensor<double>& q, const Tensor<double>& k, const Tensor<double>& v) {
  const std::size_t n = q.dim(0), m = k.dim(0), d = q.dim(1), dv = v.dim(1);
  Tensor<double> y({n, dv});
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> logits(m);
    double top = -INFINITY;
    for (std::size_t j = 0; j < m; ++j) {
      double s = 0.0;
      for (std::size_t t = 0; t < d; ++t) s += q[i * d + t] * k[j * d + t];
      logits[j] = s / std::sqrt(static_cast<double>(d));
      top = std::max(top, logits[j]);
    }
    double z = 0.0;
    for (auto& l : logits) z += (l = std::exp(l - top));
    for (std::size_t j = 0; j < m; ++j)
      for (std::size_t t = 0; t < dv; ++t) y[i * dv + t] += logits[j] / z * v[j * dv + t];
  }
  return y;
}

/// SSIM of one plane, computed window by window with an explicitly built
/// 2-D Gaussian kernel. `plane` points at h*w row-major values.
inline double brute_force_ssim_plane(const double* x, const double* y, std::size_t h, std::size_t w,
                                     std::size_t win, double sigma, double k1, double k2, double range) {
  std::vector<double> g(win * win);
  double total = 0.0;
  const double half = (static_cast<double>(win) - 1.0) / 2.0;
  for (std::size_t a = 0; a < win; ++a)
    for (std::size_t b = 0; b < win; ++b) {
      const double da = a - half, db = b - half;
      g[a * win + b] = std::exp(-(da * da + db * db) / (2.0 * sigma * sigma));
      total += g[a * win + b];
    }
  for (auto& v : g) v /= total;
  const double c1 = (k1 * range) * (k1 * range), c2 = (k2 * range) * (k2 * range);
  double acc = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i + win <= h; ++i)
    for (std::size_t j = 0; j + win <= w; ++j) {
      double mx = 0, my = 0;
      for (std::size_t a = 0; a < win; ++a)
        for (std::size_t b = 0; b < win; ++b) {
          mx += g[a * win + b] * x[(i + a) * w + j + b];
          my += g[a * win + b] * y[(i + a) * w + j + b];
        }
      double vx = 0, vy = 0, cxy = 0;
      for (std::size_t a = 0; a < win; ++a)
        for (std::size_t b = 0; b < win; ++b) {
          const double dx = x[(i + a) * w + j + b] - mx, dy = y[(i + a) * w + j + b] - my;
          vx += g[a * win + b] * dx * dx;
          vy += g[a * win + b] * dy * dy;
          cxy += g[a * win + b] * dx * dy;
        }
      acc += ((2 * mx * my + c1) * (2 * cxy + c2)) / ((mx * mx + my * my + c1) * (vx + vy + c2));
      ++count;
    }
  return acc / static_cast<double>(count);
}

}  // namespace dpaf::oracle
