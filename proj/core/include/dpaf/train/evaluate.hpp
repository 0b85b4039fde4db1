#pragma once

#include <functional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dpaf/net/model.hpp"
#include "dpaf/objective/ssim.hpp"
#include "dpaf/rain/dataset.hpp"

namespace dpaf::train {

struct PairMetrics {
  std::string pair_id;
  double psnr_db = 0.0;
  double ssim = 0.0;
};

struct MetricReport {
  std::vector<PairMetrics> rows;
  double mean_psnr = 0.0;
  double median_psnr = 0.0;
  double mean_ssim = 0.0;
  double median_ssim = 0.0;
};

/// Maps a sample to a 3 x H x W prediction of its clean image.
using Predictor = std::function<rain::Image(const rain::Sample&)>;

/// Scores predictions (clamped to [0, 1]) against the clean images.
/// Throws ParameterError on an empty dataset.
MetricReport evaluate(const std::vector<rain::Sample>& samples, const Predictor& predict,
                      const objective::SsimConfig& ssim_cfg = {});

/// Recomputes the aggregate fields from `rows`.
void summarize(MetricReport& report);

/// PSNR values of +infinity are written as the string "inf".
nlohmann::json to_json(const MetricReport& report);
MetricReport metric_report_from_json(const nlohmann::json& j);

double median(std::vector<double> values);

/// Pads a 3 x H x W image on the bottom/right by mirror reflection (edge
/// pixel not repeated) up to multiples of `multiple`.
rain::Image pad_reflect(const rain::Image& image, std::size_t multiple);

/// Runs the model on an image of any size: reflect-pads to the model's
/// downsampling multiple, infers, and crops back. `padded` reports whether
/// padding was needed.
rain::Image derain(const net::Model<float>& model, const rain::Image& image, bool* padded = nullptr);

Predictor model_predictor(const net::Model<float>& model);
/// Returns the rainy input unchanged.
Predictor identity_predictor();

}  // namespace dpaf::train
