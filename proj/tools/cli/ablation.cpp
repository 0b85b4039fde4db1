#include "ablation.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "dpaf/errors.hpp"
#include "dpaf/train/evaluate.hpp"

namespace dpaf::cli {

std::pair<std::vector<rain::Sample>, std::vector<rain::Sample>> split_holdout(std::vector<rain::Sample> samples,
                                                                             double fraction) {
  std::size_t held = static_cast<std::size_t>(std::llround(static_cast<double>(samples.size()) * fraction));
  if (fraction > 0 && held == 0) held = 1;
  if (held >= samples.size()) {
    throw ParameterError("held-out fraction leaves no training pairs (" + std::to_string(samples.size()) +
                         " pairs)");
  }
  std::vector<rain::Sample> heldout(std::make_move_iterator(samples.end() - static_cast<std::ptrdiff_t>(held)),
                                    std::make_move_iterator(samples.end()));
  samples.resize(samples.size() - held);
  return {std::move(samples), std::move(heldout)};
}

AblationTable run_ablation(const AblationOptions& options, const std::vector<rain::Sample>& samples) {
  std::vector<objective::LossWeights> loss_sets = options.loss_sets;
  if (loss_sets.empty()) loss_sets.push_back(options.base.train.weights);
  if (options.variants.size() < 2 && loss_sets.size() < 2) {
    throw ConfigError("ablation needs at least two variants or two loss-weight sets");
  }
  if (options.seeds.empty()) throw ConfigError("ablation needs at least one seed");
  auto [train_set, heldout] = split_holdout(samples, options.base.data.holdout);
  if (heldout.empty()) throw ConfigError("ablation needs a held-out split (data.holdout > 0)");

  AblationTable table;
  table.train_pairs = train_set.size();
  table.heldout_pairs = heldout.size();
  for (const auto variant : options.variants) {
    for (const auto& weights : loss_sets) {
      AblationRow row;
      row.variant = variant;
      row.weights = weights;
      for (const auto seed : options.seeds) {
        net::ModelConfig mc = options.base.model;
        mc.variant = variant;
        train::TrainConfig tc = options.base.train;
        tc.weights = weights;
        tc.seed = seed;
        net::Model<float> model(mc, seed);
        train::Trainer trainer(model, train_set, tc);
        train::run_training(trainer);
        const auto report = train::evaluate(heldout, train::model_predictor(model), tc.ssim);
        row.runs.push_back({seed, report.mean_psnr, report.mean_ssim, trainer.step()});
        if (options.log) {
          char line[256];
          std::snprintf(line, sizeof line, "%s seed %llu: %zu steps, held-out PSNR %.3f dB, SSIM %.4f",
                        net::to_string(variant).c_str(), static_cast<unsigned long long>(seed), trainer.step(),
                        report.mean_psnr, report.mean_ssim);
          options.log(line);
        }
      }
      std::vector<double> p, s;
      for (const auto& r : row.runs) {
        p.push_back(r.psnr_db);
        s.push_back(r.ssim);
      }
      row.median_psnr = train::median(p);
      row.median_ssim = train::median(s);
      table.rows.push_back(std::move(row));
    }
  }
  return table;
}

nlohmann::json to_json(const AblationTable& table) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : table.rows) {
    nlohmann::json runs = nlohmann::json::array();
    for (const auto& run : r.runs) {
      runs.push_back({{"seed", run.seed}, {"psnr_db", run.psnr_db}, {"ssim", run.ssim}, {"steps", run.steps}});
    }
    rows.push_back({{"variant", net::to_string(r.variant)},
                    {"loss", objective::to_json(r.weights)},
                    {"runs", runs},
                    {"median_psnr_db", r.median_psnr},
                    {"median_ssim", r.median_ssim}});
  }
  return {{"train_pairs", table.train_pairs}, {"heldout_pairs", table.heldout_pairs}, {"rows", rows}};
}

std::string format_table(const AblationTable& table) {
  std::ostringstream out;
  char buf[128];
  out << "| variant | loss (mse/ssim/perp) |";
  const std::size_t seeds = table.rows.empty() ? 0 : table.rows.front().runs.size();
  for (std::size_t i = 0; i < seeds; ++i) {
    out << " seed " << table.rows.front().runs[i].seed << " PSNR/SSIM |";
  }
  out << " median PSNR/SSIM |\n|---|---|";
  for (std::size_t i = 0; i <= seeds; ++i) out << "---|";
  out << '\n';
  for (const auto& r : table.rows) {
    std::snprintf(buf, sizeof buf, "%g/%g/%g", r.weights.w_mse, r.weights.w_ssim, r.weights.w_perp);
    out << "| " << net::to_string(r.variant) << " | " << buf << " |";
    for (const auto& run : r.runs) {
      std::snprintf(buf, sizeof buf, " %.2f/%.3f |", run.psnr_db, run.ssim);
      out << buf;
    }
    std::snprintf(buf, sizeof buf, " %.2f/%.3f |\n", r.median_psnr, r.median_ssim);
    out << buf;
  }
  return out.str();
}

}  // namespace dpaf::cli
