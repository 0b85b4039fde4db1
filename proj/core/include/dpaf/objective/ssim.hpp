#pragma once

#include <cstddef>

#include <nlohmann/json.hpp>

#include "dpaf/tensor.hpp"

namespace dpaf::objective {

/// Gaussian-window SSIM settings. The defaults are the usual constants of
/// Wang et al. (window 11, sigma 1.5, k1 0.01, k2 0.03).
struct SsimConfig {
  std::size_t window = 11;
  double sigma = 1.5;
  double k1 = 0.01;
  double k2 = 0.03;
  double dynamic_range = 1.0;

  /// Throws ConfigError.
  void validate() const;
  bool operator==(const SsimConfig&) const = default;
};

nlohmann::json to_json(const SsimConfig& c);
SsimConfig ssim_config_from_json(const nlohmann::json& j);

/// Normalized 1-D Gaussian taps; the 2-D window is their outer product.
std::vector<double> gaussian_window(std::size_t size, double sigma);

/// Mean SSIM over every valid window position of every plane. The last two
/// axes are height and width; all leading axes (batch, channel) index
/// independent planes, so colour images are scored per channel and averaged.
/// Local statistics use population (1/sum-of-weights) moments.
/// Throws ParameterError when a plane is smaller than the window.
template <typename T>
double ssim(const Tensor<T>& x, const Tensor<T>& y, const SsimConfig& cfg = {});

/// 1 - ssim(pred, target). When `grad` is non-null it receives d loss / d pred.
template <typename T>
double ssim_loss(const Tensor<T>& pred, const Tensor<T>& target, const SsimConfig& cfg, Tensor<T>* grad);

}  // namespace dpaf::objective
