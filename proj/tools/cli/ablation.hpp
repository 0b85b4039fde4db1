#pragma once

#include <functional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "run_config.hpp"

namespace dpaf::cli {

struct AblationRun {
  std::uint64_t seed = 0;
  double psnr_db = 0.0;  // mean over held-out pairs
  double ssim = 0.0;
  std::size_t steps = 0;
};

struct AblationRow {
  net::Variant variant = net::Variant::kFull;
  objective::LossWeights weights;
  std::vector<AblationRun> runs;  // one per seed, in seed order
  double median_psnr = 0.0;
  double median_ssim = 0.0;
};

struct AblationTable {
  std::vector<AblationRow> rows;
  std::size_t train_pairs = 0;
  std::size_t heldout_pairs = 0;
};

struct AblationOptions {
  RunConfig base;
  std::vector<net::Variant> variants;
  /// Empty means the base config's weights only.
  std::vector<objective::LossWeights> loss_sets;
  std::vector<std::uint64_t> seeds;
  std::function<void(const std::string&)> log;
};

/// Splits off the last round(n * fraction) samples (at least one when the
/// fraction is positive) as the held-out set.
std::pair<std::vector<rain::Sample>, std::vector<rain::Sample>> split_holdout(std::vector<rain::Sample> samples,
                                                                             double fraction);

/// Trains every (variant, loss set) arm once per seed on the training split
/// and scores it on the held-out split. Requires at least two variants or two
/// loss sets (ConfigError otherwise).
AblationTable run_ablation(const AblationOptions& options, const std::vector<rain::Sample>& samples);

nlohmann::json to_json(const AblationTable& table);
/// Markdown table: one row per arm with per-seed PSNR/SSIM and the medians.
std::string format_table(const AblationTable& table);

}  // namespace dpaf::cli
