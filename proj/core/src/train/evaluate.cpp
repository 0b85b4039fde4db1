#include "dpaf/train/evaluate.hpp"

#include <algorithm>
#include <cmath>

#include "dpaf/errors.hpp"
#include "dpaf/objective/losses.hpp"
#include "dpaf/rain/rain_model.hpp"

namespace dpaf::train {

double median(std::vector<double> values) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

void summarize(MetricReport& report) {
  std::vector<double> p, s;
  for (const auto& r : report.rows) {
    p.push_back(r.psnr_db);
    s.push_back(r.ssim);
  }
  const auto mean = [](const std::vector<double>& v) {
    double t = 0.0;
    for (double x : v) t += x;
    return v.empty() ? 0.0 : t / static_cast<double>(v.size());
  };
  report.mean_psnr = mean(p);
  report.median_psnr = median(p);
  report.mean_ssim = mean(s);
  report.median_ssim = median(s);
}

MetricReport evaluate(const std::vector<rain::Sample>& samples, const Predictor& predict,
                      const objective::SsimConfig& ssim_cfg) {
  if (samples.empty()) throw ParameterError("evaluation set is empty");
  MetricReport report;
  for (const auto& s : samples) {
    rain::Image pred = predict(s);
    for (auto& v : pred.values()) v = std::clamp(v, 0.0f, 1.0f);
    report.rows.push_back({s.id, objective::psnr(pred, s.clean), objective::ssim(pred, s.clean, ssim_cfg)});
  }
  summarize(report);
  return report;
}

namespace {

nlohmann::json encode_db(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

double decode_db(const nlohmann::json& j) {
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf") return objective::kPsnrInfinity;
    if (s == "-inf") return -objective::kPsnrInfinity;
    throw ConfigError("unexpected metric value '" + s + "'");
  }
  return j.get<double>();
}

}  // namespace

nlohmann::json to_json(const MetricReport& report) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : report.rows) {
    rows.push_back({{"pair_id", r.pair_id}, {"psnr_db", encode_db(r.psnr_db)}, {"ssim", r.ssim}});
  }
  return {{"pairs", rows},
          {"aggregate",
           {{"count", report.rows.size()},
            {"mean_psnr_db", encode_db(report.mean_psnr)},
            {"median_psnr_db", encode_db(report.median_psnr)},
            {"mean_ssim", report.mean_ssim},
            {"median_ssim", report.median_ssim}}}};
}

MetricReport metric_report_from_json(const nlohmann::json& j) {
  MetricReport report;
  for (const auto& r : j.at("pairs")) {
    report.rows.push_back({r.at("pair_id").get<std::string>(), decode_db(r.at("psnr_db")), r.at("ssim").get<double>()});
  }
  const auto& a = j.at("aggregate");
  report.mean_psnr = decode_db(a.at("mean_psnr_db"));
  report.median_psnr = decode_db(a.at("median_psnr_db"));
  report.mean_ssim = a.at("mean_ssim").get<double>();
  report.median_ssim = a.at("median_ssim").get<double>();
  return report;
}

namespace {

std::size_t reflect_index(std::size_t i, std::size_t n) {
  if (n == 1) return 0;
  const std::size_t period = 2 * n - 2;
  i %= period;
  return i < n ? i : period - i;
}

std::size_t round_up(std::size_t v, std::size_t m) { return (v + m - 1) / m * m; }

}  // namespace

rain::Image pad_reflect(const rain::Image& image, std::size_t multiple) {
  if (image.rank() != 3) throw ShapeError("pad_reflect expects C x H x W, got " + shape_string(image.shape()));
  const std::size_t c = image.dim(0), h = image.dim(1), w = image.dim(2);
  const std::size_t ph = round_up(h, multiple), pw = round_up(w, multiple);
  if (ph == h && pw == w) return image;
  rain::Image out({c, ph, pw});
  for (std::size_t ch = 0; ch < c; ++ch) {
    for (std::size_t y = 0; y < ph; ++y) {
      const std::size_t sy = reflect_index(y, h);
      for (std::size_t x = 0; x < pw; ++x) {
        out[(ch * ph + y) * pw + x] = image[(ch * h + sy) * w + reflect_index(x, w)];
      }
    }
  }
  return out;
}

rain::Image derain(const net::Model<float>& model, const rain::Image& image, bool* padded) {
  if (image.rank() != 3 || image.dim(0) != 3) {
    throw ShapeError("derain expects a 3 x H x W image, got " + shape_string(image.shape()));
  }
  const std::size_t h = image.dim(1), w = image.dim(2);
  const rain::Image input = pad_reflect(image, model.config().downsample());
  const bool was_padded = input.shape() != image.shape();
  if (padded) *padded = was_padded;
  Tensor<float> out = model.infer(input.reshaped({1, 3, input.dim(1), input.dim(2)}));
  out = std::move(out).reshaped({3, input.dim(1), input.dim(2)});
  if (!was_padded) return out;
  return rain::crop(out, 0, 0, h, w);
}

Predictor model_predictor(const net::Model<float>& model) {
  return [&model](const rain::Sample& s) { return derain(model, s.rainy); };
}

Predictor identity_predictor() {
  return [](const rain::Sample& s) { return s.rainy; };
}

}  // namespace dpaf::train
