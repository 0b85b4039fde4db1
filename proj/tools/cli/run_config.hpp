#pragma once

#include <cstdint>
#include <filesystem>

#include <nlohmann/json.hpp>

#include "dpaf/net/config.hpp"
#include "dpaf/rain/dataset.hpp"
#include "dpaf/train/trainer.hpp"

// One JSON document configures every command:
//
//   {
//     "seed": 0,                       model init + training order
//     "data":     { "seed", "n_pairs", "height", "width", "composition",
//                   "ranges": {...}, "holdout" },
//     "model":    { ModelConfig fields },
//     "loss":     { "w_mse", "w_ssim", "w_perp", "ssim": {...}, "perceptual": {...} },
//     "schedule": { "lr_init", "lr_final", "total_epochs", "warmup_steps" },
//     "train":    { "batch", "patch", "hflip", "checkpoint_every", "max_steps",
//                   "clip_grad_norm", "adam": {...} }
//   }
//
// Every section and key is optional; unknown keys are rejected.
namespace dpaf::cli {

struct DataSection {
  rain::DatasetSpec spec;
  /// Fraction of pairs (taken from the end of the manifest) held out for
  /// evaluation by the ablation harness.
  double holdout = 0.2;
};

struct RunConfig {
  std::uint64_t seed = 0;
  DataSection data;
  net::ModelConfig model;
  train::TrainConfig train;  // includes schedule and loss settings

  void validate() const;
};

nlohmann::json to_json(const RunConfig& c);
RunConfig run_config_from_json(const nlohmann::json& j);
/// Reads a config file; ConfigError on malformed JSON or unknown keys.
RunConfig load_run_config(const std::filesystem::path& path);
void write_json(const std::filesystem::path& path, const nlohmann::json& j);

}  // namespace dpaf::cli
