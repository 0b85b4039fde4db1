#pragma once

#include <cstddef>
#include <string>

#include <nlohmann/json.hpp>

namespace dpaf::net {

enum class Variant { kFull, kOnlyCnn, kOnlyTransformer, kAdditiveFusion };

std::string to_string(Variant v);
Variant variant_from_string(const std::string& s);

/// Architecture hyperparameters. Channel widths: the CNN branch doubles its
/// width at each of `stages` stride-2 stages, so the fused feature map has
/// base_channels * 2^stages channels at 1/2^stages resolution, and the
/// decoder halves the width back with each x2 restoration layer.
struct ModelConfig {
  std::size_t base_channels = 16;
  std::size_t stages = 2;
  std::size_t cnn_blocks_per_stage = 1;
  std::size_t vit_depth = 2;
  std::size_t vit_heads = 4;
  std::size_t vit_dim = 64;
  std::size_t mlp_ratio = 2;
  std::size_t patch = 4;  // must equal 2^stages
  std::size_t fusion_reduction = 4;
  bool positional_embedding = true;
  std::size_t pos_grid = 16;  // token lattice side of the learned embeddings
  Variant variant = Variant::kFull;

  /// Throws ConfigError on any violated invariant.
  void validate() const;

  std::size_t downsample() const { return std::size_t{1} << stages; }
  std::size_t deep_channels() const { return base_channels << stages; }
  bool has_cnn_branch() const { return variant != Variant::kOnlyTransformer; }
  bool has_vit_branch() const { return variant != Variant::kOnlyCnn; }

  bool operator==(const ModelConfig&) const = default;
};

nlohmann::json to_json(const ModelConfig& c);
/// Missing keys keep their defaults; unknown keys are rejected. When
/// "patch" is absent it is derived from "stages".
ModelConfig model_config_from_json(const nlohmann::json& j);

}  // namespace dpaf::net
