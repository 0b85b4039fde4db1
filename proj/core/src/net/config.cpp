#include "dpaf/net/config.hpp"

#include "dpaf/errors.hpp"
#include "dpaf/json_util.hpp"

namespace dpaf::net {

std::string to_string(Variant v) {
  switch (v) {
    case Variant::kFull: return "Full";
    case Variant::kOnlyCnn: return "OnlyCNN";
    case Variant::kOnlyTransformer: return "OnlyTransformer";
    case Variant::kAdditiveFusion: return "AdditiveFusion";
  }
  return "?";
}

Variant variant_from_string(const std::string& s) {
  if (s == "Full") return Variant::kFull;
  if (s == "OnlyCNN") return Variant::kOnlyCnn;
  if (s == "OnlyTransformer") return Variant::kOnlyTransformer;
  if (s == "AdditiveFusion") return Variant::kAdditiveFusion;
  throw ConfigError("unknown variant '" + s + "' (expected Full, OnlyCNN, OnlyTransformer or AdditiveFusion)");
}

void ModelConfig::validate() const {
  if (base_channels == 0) throw ConfigError("base_channels must be positive");
  if (stages == 0 || stages > 8) throw ConfigError("stages must lie in [1, 8]");
  if (patch != downsample()) {
    throw ConfigError("patch (" + std::to_string(patch) + ") must equal 2^stages (" +
                      std::to_string(downsample()) + ")");
  }
  if (has_vit_branch()) {
    if (vit_dim == 0 || vit_heads == 0 || vit_dim % vit_heads != 0) {
      throw ConfigError("vit_heads (" + std::to_string(vit_heads) + ") must divide vit_dim (" +
                        std::to_string(vit_dim) + ")");
    }
    if (mlp_ratio == 0) throw ConfigError("mlp_ratio must be positive");
    if (positional_embedding && pos_grid == 0) throw ConfigError("pos_grid must be positive");
  }
  if (variant == Variant::kFull) {
    const std::size_t fused = 2 * deep_channels();
    if (fusion_reduction == 0 || fused % fusion_reduction != 0) {
      throw ConfigError("fusion_reduction (" + std::to_string(fusion_reduction) +
                        ") must divide the fused width " + std::to_string(fused));
    }
  }
}

nlohmann::json to_json(const ModelConfig& c) {
  return {{"base_channels", c.base_channels},
          {"stages", c.stages},
          {"cnn_blocks_per_stage", c.cnn_blocks_per_stage},
          {"vit_depth", c.vit_depth},
          {"vit_heads", c.vit_heads},
          {"vit_dim", c.vit_dim},
          {"mlp_ratio", c.mlp_ratio},
          {"patch", c.patch},
          {"fusion_reduction", c.fusion_reduction},
          {"positional_embedding", c.positional_embedding},
          {"pos_grid", c.pos_grid},
          {"variant", to_string(c.variant)}};
}

ModelConfig model_config_from_json(const nlohmann::json& j) {
  const std::string ctx = "model";
  require_known_keys(j,
                     {"base_channels", "stages", "cnn_blocks_per_stage", "vit_depth", "vit_heads", "vit_dim",
                      "mlp_ratio", "patch", "fusion_reduction", "positional_embedding", "pos_grid", "variant"},
                     ctx);
  ModelConfig c;
  read_optional(j, "base_channels", c.base_channels, ctx);
  read_optional(j, "stages", c.stages, ctx);
  read_optional(j, "cnn_blocks_per_stage", c.cnn_blocks_per_stage, ctx);
  read_optional(j, "vit_depth", c.vit_depth, ctx);
  read_optional(j, "vit_heads", c.vit_heads, ctx);
  read_optional(j, "vit_dim", c.vit_dim, ctx);
  read_optional(j, "mlp_ratio", c.mlp_ratio, ctx);
  c.patch = c.downsample();
  read_optional(j, "patch", c.patch, ctx);
  read_optional(j, "fusion_reduction", c.fusion_reduction, ctx);
  read_optional(j, "positional_embedding", c.positional_embedding, ctx);
  read_optional(j, "pos_grid", c.pos_grid, ctx);
  std::string variant = to_string(c.variant);
  read_optional(j, "variant", variant, ctx);
  c.variant = variant_from_string(variant);
  c.validate();
  return c;
}

}  // namespace dpaf::net
