#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dpaf/nn/params.hpp"
#include "dpaf/nn/serialize.hpp"

namespace dpaf::train {

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Bias-corrected Adam over every parameter of a store:
///   m = b1 m + (1 - b1) g,  v = b2 v + (1 - b2) g^2
///   p -= lr * (m / (1 - b1^t)) / (sqrt(v / (1 - b2^t)) + eps)
template <typename T>
class Adam {
 public:
  explicit Adam(const nn::ParamStore<T>& params, AdamConfig config = {});

  /// Applies one update from the accumulated Param::grad buffers. Throws
  /// ShapeError when the store no longer matches the moment buffers.
  void step(nn::ParamStore<T>& params, double lr);

  std::uint64_t steps() const noexcept { return steps_; }
  const AdamConfig& config() const noexcept { return config_; }
  const std::vector<Tensor<T>>& first_moments() const noexcept { return m_; }
  const std::vector<Tensor<T>>& second_moments() const noexcept { return v_; }

  /// Adds "<prefix>m/<name>", "<prefix>v/<name>" and "<prefix>steps".
  void save(nn::Container& c, const nn::ParamStore<T>& params, const std::string& prefix = "adam/") const;
  void restore(const nn::Container& c, const nn::ParamStore<T>& params, const std::string& prefix = "adam/");

 private:
  AdamConfig config_;
  std::vector<Tensor<T>> m_, v_;
  std::uint64_t steps_ = 0;
};

}  // namespace dpaf::train
