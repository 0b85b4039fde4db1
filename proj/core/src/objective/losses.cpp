#include "dpaf/objective/losses.hpp"

#include <cmath>

#include "dpaf/errors.hpp"

namespace dpaf::objective {

template <typename T>
double mse_loss(const Tensor<T>& pred, const Tensor<T>& target, Tensor<T>* grad) {
  require_same_shape(pred, target, "mse loss");
  if (pred.size() == 0) throw ShapeError("mse loss of empty tensors");
  const double inv = 1.0 / static_cast<double>(pred.size());
  if (grad) *grad = Tensor<T>(pred.shape());
  double total = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double d = static_cast<double>(pred[i]) - static_cast<double>(target[i]);
    total += d * d;
    if (grad) (*grad)[i] = static_cast<T>(2.0 * d * inv);
  }
  return total * inv;
}

template <typename T>
double psnr(const Tensor<T>& pred, const Tensor<T>& target, double max_val) {
  if (!(max_val > 0)) throw ParameterError("psnr max_val must be positive");
  const double mse = mse_loss(pred, target);
  if (mse == 0.0) return kPsnrInfinity;
  return 10.0 * std::log10(max_val * max_val / mse);
}

void LossWeights::validate() const {
  for (double w : {w_mse, w_ssim, w_perp}) {
    if (!std::isfinite(w) || w < 0) throw ConfigError("loss weights must be finite and non-negative");
  }
  if (w_mse == 0 && w_ssim == 0 && w_perp == 0) throw ConfigError("at least one loss weight must be positive");
}

nlohmann::json to_json(const LossWeights& w) {
  return {{"w_mse", w.w_mse}, {"w_ssim", w.w_ssim}, {"w_perp", w.w_perp}};
}

namespace {

template <typename T>
void accumulate(Tensor<T>& acc, const Tensor<T>& g, double w) {
  if (acc.empty()) acc = Tensor<T>(g.shape());
  for (std::size_t i = 0; i < g.size(); ++i) acc[i] += static_cast<T>(w * static_cast<double>(g[i]));
}

}  // namespace

template <typename T>
LossBreakdown combined_loss(const Tensor<T>& pred, const Tensor<T>& target, const LossWeights& weights,
                            const SsimConfig& ssim_cfg, const PerceptualExtractor<T>* extractor, Tensor<T>* grad) {
  weights.validate();
  require_same_shape(pred, target, "combined loss");
  if (weights.w_perp > 0 && !extractor) throw ConfigError("perceptual weight is positive but no extractor given");
  LossBreakdown out;
  Tensor<T> acc, part;
  if (weights.w_mse > 0) {
    out.mse = mse_loss(pred, target, grad ? &part : nullptr);
    if (grad) accumulate(acc, part, weights.w_mse);
  }
  if (weights.w_ssim > 0) {
    out.ssim = ssim_loss(pred, target, ssim_cfg, grad ? &part : nullptr);
    if (grad) accumulate(acc, part, weights.w_ssim);
  }
  if (weights.w_perp > 0) {
    out.perp = extractor->loss(pred, target, grad ? &part : nullptr);
    if (grad) accumulate(acc, part, weights.w_perp);
  }
  out.total = weights.w_mse * out.mse + weights.w_ssim * out.ssim + weights.w_perp * out.perp;
  if (grad) *grad = std::move(acc);
  return out;
}

template double mse_loss(const Tensor<float>&, const Tensor<float>&, Tensor<float>*);
template double mse_loss(const Tensor<double>&, const Tensor<double>&, Tensor<double>*);
template double psnr(const Tensor<float>&, const Tensor<float>&, double);
template double psnr(const Tensor<double>&, const Tensor<double>&, double);
template LossBreakdown combined_loss(const Tensor<float>&, const Tensor<float>&, const LossWeights&,
                                     const SsimConfig&, const PerceptualExtractor<float>*, Tensor<float>*);
template LossBreakdown combined_loss(const Tensor<double>&, const Tensor<double>&, const LossWeights&,
                                     const SsimConfig&, const PerceptualExtractor<double>*, Tensor<double>*);

}  // namespace dpaf::objective
