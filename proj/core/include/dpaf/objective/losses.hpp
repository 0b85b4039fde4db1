#pragma once

#include <limits>

#include <nlohmann/json.hpp>

#include "dpaf/objective/perceptual.hpp"
#include "dpaf/objective/ssim.hpp"
#include "dpaf/tensor.hpp"

namespace dpaf::objective {

/// Mean of (pred - target)^2 over every element; `grad` (optional) gets
/// 2 (pred - target) / count.
template <typename T>
double mse_loss(const Tensor<T>& pred, const Tensor<T>& target, Tensor<T>* grad = nullptr);

/// PSNR of identical images.
inline constexpr double kPsnrInfinity = std::numeric_limits<double>::infinity();

/// 10 log10(max_val^2 / mse) in dB; kPsnrInfinity when mse is exactly zero.
template <typename T>
double psnr(const Tensor<T>& pred, const Tensor<T>& target, double max_val = 1.0);

struct LossWeights {
  double w_mse = 1.0;
  double w_ssim = 0.2;
  double w_perp = 0.04;

  /// Weights must be finite, non-negative, and not all zero.
  void validate() const;
  bool operator==(const LossWeights&) const = default;
};

nlohmann::json to_json(const LossWeights& w);

struct LossBreakdown {
  double total = 0.0;
  double mse = 0.0;
  double ssim = 0.0;  // the loss term 1 - SSIM
  double perp = 0.0;
};

/// w_mse * mse + w_ssim * (1 - ssim) + w_perp * perceptual. Terms with zero
/// weight are not evaluated and report 0. `extractor` may be null only when
/// w_perp is zero. `grad` (optional) receives the weighted gradient sum.
template <typename T>
LossBreakdown combined_loss(const Tensor<T>& pred, const Tensor<T>& target, const LossWeights& weights,
                            const SsimConfig& ssim_cfg, const PerceptualExtractor<T>* extractor,
                            Tensor<T>* grad = nullptr);

}  // namespace dpaf::objective
