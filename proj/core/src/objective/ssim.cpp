#include "dpaf/objective/ssim.hpp"

#include <cmath>
#include <vector>

#include "dpaf/errors.hpp"
#include "dpaf/json_util.hpp"

namespace dpaf::objective {

void SsimConfig::validate() const {
  if (window < 3 || window % 2 == 0) throw ConfigError("ssim window must be odd and at least 3");
  if (!(sigma > 0)) throw ConfigError("ssim sigma must be positive");
  if (!(k1 > 0) || !(k2 > 0)) throw ConfigError("ssim k1 and k2 must be positive");
  if (!(dynamic_range > 0)) throw ConfigError("ssim dynamic_range must be positive");
}

nlohmann::json to_json(const SsimConfig& c) {
  return {{"window", c.window}, {"sigma", c.sigma}, {"k1", c.k1}, {"k2", c.k2}, {"dynamic_range", c.dynamic_range}};
}

SsimConfig ssim_config_from_json(const nlohmann::json& j) {
  const std::string ctx = "loss.ssim";
  require_known_keys(j, {"window", "sigma", "k1", "k2", "dynamic_range"}, ctx);
  SsimConfig c;
  read_optional(j, "window", c.window, ctx);
  read_optional(j, "sigma", c.sigma, ctx);
  read_optional(j, "k1", c.k1, ctx);
  read_optional(j, "k2", c.k2, ctx);
  read_optional(j, "dynamic_range", c.dynamic_range, ctx);
  c.validate();
  return c;
}

std::vector<double> gaussian_window(std::size_t size, double sigma) {
  std::vector<double> g(size);
  const double center = (static_cast<double>(size) - 1.0) / 2.0;
  double total = 0.0;
  for (std::size_t i = 0; i < size; ++i) {
    const double d = static_cast<double>(i) - center;
    g[i] = std::exp(-d * d / (2.0 * sigma * sigma));
    total += g[i];
  }
  for (auto& v : g) v /= total;
  return g;
}

namespace {

struct Planes {
  std::size_t count, h, w;
};

template <typename T>
Planes plane_layout(const Tensor<T>& x, const Tensor<T>& y, const SsimConfig& cfg) {
  require_same_shape(x, y, "ssim");
  cfg.validate();
  if (x.rank() < 2) throw ShapeError("ssim needs at least a 2-D image, got " + shape_string(x.shape()));
  Planes p{1, x.dim(x.rank() - 2), x.dim(x.rank() - 1)};
  for (std::size_t a = 0; a + 2 < x.rank(); ++a) p.count *= x.dim(a);
  if (p.h < cfg.window || p.w < cfg.window) {
    throw ParameterError("image " + std::to_string(p.h) + "x" + std::to_string(p.w) +
                         " is smaller than the ssim window " + std::to_string(cfg.window));
  }
  return p;
}

// Valid separable filtering of an h x w plane: out is (h-k+1) x (w-k+1).
void filter_valid(const double* in, std::size_t h, std::size_t w, const std::vector<double>& g, double* tmp,
                  double* out) {
  const std::size_t k = g.size(), oh = h - k + 1, ow = w - k + 1;
  for (std::size_t i = 0; i < h; ++i) {
    for (std::size_t j = 0; j < ow; ++j) {
      double s = 0.0;
      for (std::size_t b = 0; b < k; ++b) s += g[b] * in[i * w + j + b];
      tmp[i * ow + j] = s;
    }
  }
  for (std::size_t i = 0; i < oh; ++i) {
    for (std::size_t j = 0; j < ow; ++j) {
      double s = 0.0;
      for (std::size_t a = 0; a < k; ++a) s += g[a] * tmp[(i + a) * ow + j];
      out[i * ow + j] = s;
    }
  }
}

// Adjoint of filter_valid: scatters an (h-k+1) x (w-k+1) map back to h x w.
void filter_valid_adjoint(const double* in, std::size_t h, std::size_t w, const std::vector<double>& g,
                          double* tmp, double* out) {
  const std::size_t k = g.size(), oh = h - k + 1, ow = w - k + 1;
  std::fill(tmp, tmp + h * ow, 0.0);
  for (std::size_t i = 0; i < oh; ++i) {
    for (std::size_t a = 0; a < k; ++a) {
      for (std::size_t j = 0; j < ow; ++j) tmp[(i + a) * ow + j] += g[a] * in[i * ow + j];
    }
  }
  std::fill(out, out + h * w, 0.0);
  for (std::size_t i = 0; i < h; ++i) {
    for (std::size_t j = 0; j < ow; ++j) {
      for (std::size_t b = 0; b < k; ++b) out[i * w + j + b] += g[b] * tmp[i * ow + j];
    }
  }
}

// Computes mean SSIM and, when grad is non-null, d(mean SSIM)/dx.
template <typename T>
double ssim_impl(const Tensor<T>& x, const Tensor<T>& y, const SsimConfig& cfg, Tensor<T>* grad) {
  const Planes p = plane_layout(x, y, cfg);
  const auto g = gaussian_window(cfg.window, cfg.sigma);
  const double c1 = (cfg.k1 * cfg.dynamic_range) * (cfg.k1 * cfg.dynamic_range);
  const double c2 = (cfg.k2 * cfg.dynamic_range) * (cfg.k2 * cfg.dynamic_range);
  const std::size_t hw = p.h * p.w;
  const std::size_t oh = p.h - cfg.window + 1, ow = p.w - cfg.window + 1, on = oh * ow;
  const double norm = 1.0 / static_cast<double>(on * p.count);

  std::vector<double> px(hw), py(hw), prod(hw), tmp(p.h * ow);
  std::vector<double> mx(on), my(on), exx(on), eyy(on), exy(on);
  std::vector<double> dmx, dexx, dexy, back;
  if (grad) {
    *grad = Tensor<T>(x.shape());
    dmx.resize(on);
    dexx.resize(on);
    dexy.resize(on);
    back.resize(hw);
  }

  double total = 0.0;
  for (std::size_t plane = 0; plane < p.count; ++plane) {
    const T* xs = x.data() + plane * hw;
    const T* ys = y.data() + plane * hw;
    for (std::size_t i = 0; i < hw; ++i) {
      px[i] = static_cast<double>(xs[i]);
      py[i] = static_cast<double>(ys[i]);
    }
    filter_valid(px.data(), p.h, p.w, g, tmp.data(), mx.data());
    filter_valid(py.data(), p.h, p.w, g, tmp.data(), my.data());
    for (std::size_t i = 0; i < hw; ++i) prod[i] = px[i] * px[i];
    filter_valid(prod.data(), p.h, p.w, g, tmp.data(), exx.data());
    for (std::size_t i = 0; i < hw; ++i) prod[i] = py[i] * py[i];
    filter_valid(prod.data(), p.h, p.w, g, tmp.data(), eyy.data());
    for (std::size_t i = 0; i < hw; ++i) prod[i] = px[i] * py[i];
    filter_valid(prod.data(), p.h, p.w, g, tmp.data(), exy.data());

    double plane_sum = 0.0;
    for (std::size_t i = 0; i < on; ++i) {
      const double a1 = 2.0 * mx[i] * my[i] + c1;
      const double a2 = 2.0 * (exy[i] - mx[i] * my[i]) + c2;
      const double b1 = mx[i] * mx[i] + my[i] * my[i] + c1;
      const double b2 = (exx[i] - mx[i] * mx[i]) + (eyy[i] - my[i] * my[i]) + c2;
      const double s = (a1 * a2) / (b1 * b2);
      plane_sum += s;
      if (grad) {
        // S as a function of the filtered moments (mu_x, E[x^2], E[xy]).
        dmx[i] = norm * s * (2.0 * my[i] / a1 - 2.0 * my[i] / a2 - 2.0 * mx[i] / b1 + 2.0 * mx[i] / b2);
        dexx[i] = norm * s * (-1.0 / b2);
        dexy[i] = norm * s * (2.0 / a2);
      }
    }
    total += plane_sum;

    if (grad) {
      T* gs = grad->data() + plane * hw;
      filter_valid_adjoint(dmx.data(), p.h, p.w, g, tmp.data(), back.data());
      for (std::size_t i = 0; i < hw; ++i) prod[i] = back[i];
      filter_valid_adjoint(dexx.data(), p.h, p.w, g, tmp.data(), back.data());
      for (std::size_t i = 0; i < hw; ++i) prod[i] += 2.0 * px[i] * back[i];
      filter_valid_adjoint(dexy.data(), p.h, p.w, g, tmp.data(), back.data());
      for (std::size_t i = 0; i < hw; ++i) gs[i] = static_cast<T>(prod[i] + py[i] * back[i]);
    }
  }
  return total * norm;
}

}  // namespace

template <typename T>
double ssim(const Tensor<T>& x, const Tensor<T>& y, const SsimConfig& cfg) {
  return ssim_impl<T>(x, y, cfg, nullptr);
}

template <typename T>
double ssim_loss(const Tensor<T>& pred, const Tensor<T>& target, const SsimConfig& cfg, Tensor<T>* grad) {
  const double s = ssim_impl(pred, target, cfg, grad);
  if (grad) {
    for (auto& v : grad->values()) v = -v;
  }
  return 1.0 - s;
}

template double ssim(const Tensor<float>&, const Tensor<float>&, const SsimConfig&);
template double ssim(const Tensor<double>&, const Tensor<double>&, const SsimConfig&);
template double ssim_loss(const Tensor<float>&, const Tensor<float>&, const SsimConfig&, Tensor<float>*);
template double ssim_loss(const Tensor<double>&, const Tensor<double>&, const SsimConfig&, Tensor<double>*);

}  // namespace dpaf::objective
