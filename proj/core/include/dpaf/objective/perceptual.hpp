#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dpaf/nn/params.hpp"
#include "dpaf/nn/serialize.hpp"

namespace dpaf::objective {

struct PerceptualConfig {
  /// Output widths of the conv stages; the input has 3 channels.
  std::vector<std::size_t> widths = {16, 32, 64, 64};
  /// 1-based stage whose post-activation map is compared.
  std::size_t tap = 3;
  std::uint64_t seed = 0x5eed0f;
  /// Optional container with externally trained weights
  /// ("stage<i>.weight", "stage<i>.bias"); empty keeps the seeded weights.
  std::string weights;

  void validate() const;
};

nlohmann::json to_json(const PerceptualConfig& c);
PerceptualConfig perceptual_config_from_json(const nlohmann::json& j);

/// Frozen feature extractor: stage i is conv3x3 (padding 1) + ReLU, and a
/// 2x2 max pool precedes every stage after the first. Only the stages up to
/// the tap are evaluated. Weights never receive gradients.
template <typename T>
class PerceptualExtractor {
 public:
  explicit PerceptualExtractor(const PerceptualConfig& config = {});

  const PerceptualConfig& config() const noexcept { return config_; }
  std::size_t tap() const noexcept { return config_.tap; }

  /// Tapped features of an N x 3 x H x W batch.
  Tensor<T> features(const Tensor<T>& x) const;

  /// sum((phi(pred) - phi(target))^2) / (N * H_tap * W_tap); `grad` gets
  /// d loss / d pred when non-null.
  double loss(const Tensor<T>& pred, const Tensor<T>& target, Tensor<T>* grad) const;

  /// Replaces the seeded weights ("stage<i>.weight" / "stage<i>.bias").
  void load(const nn::Container& c);
  const nn::ParamStore<T>& params() const noexcept { return store_; }
  nn::ParamStore<T>& params() noexcept { return store_; }

 private:
  struct Trace {
    std::vector<Tensor<T>> conv_in;   // input of each conv
    std::vector<Tensor<T>> pre_relu;  // conv output
    std::vector<Shape> pool_in;
    std::vector<std::vector<std::size_t>> argmax;
  };
  Tensor<T> run(const Tensor<T>& x, Trace* trace) const;
  Tensor<T> run_backward(const Trace& trace, Tensor<T> dy) const;
  void check_resolution(const Tensor<T>& x) const;

  PerceptualConfig config_;
  nn::ParamStore<T> store_;
  std::vector<nn::Param<T>*> weights_, biases_;
};

}  // namespace dpaf::objective
