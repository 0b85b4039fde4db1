#include "run_config.hpp"

#include <fstream>

#include "dpaf/errors.hpp"
#include "dpaf/json_util.hpp"

namespace dpaf::cli {

using nlohmann::json;

void RunConfig::validate() const {
  if (data.spec.n_pairs == 0) throw ConfigError("data.n_pairs must be at least 1");
  if (!(data.holdout >= 0 && data.holdout < 1)) throw ConfigError("data.holdout must lie in [0, 1)");
  model.validate();
  train.validate();
}

json to_json(const RunConfig& c) {
  json loss = objective::to_json(c.train.weights);
  loss["ssim"] = objective::to_json(c.train.ssim);
  loss["perceptual"] = objective::to_json(c.train.perceptual);
  return {{"seed", c.seed},
          {"data",
           {{"seed", c.data.spec.seed},
            {"n_pairs", c.data.spec.n_pairs},
            {"height", c.data.spec.height},
            {"width", c.data.spec.width},
            {"composition", rain::to_string(c.data.spec.composition)},
            {"ranges", rain::to_json(c.data.spec.ranges)},
            {"holdout", c.data.holdout}}},
          {"model", net::to_json(c.model)},
          {"loss", loss},
          {"schedule", train::to_json(c.train.schedule)},
          {"train", train::train_section_to_json(c.train)}};
}

RunConfig run_config_from_json(const json& j) {
  require_known_keys(j, {"seed", "data", "model", "loss", "schedule", "train"}, "config");
  RunConfig c;
  read_optional(j, "seed", c.seed, "config");
  if (auto it = j.find("data"); it != j.end()) {
    const std::string ctx = "data";
    require_known_keys(*it, {"seed", "n_pairs", "height", "width", "composition", "ranges", "holdout"}, ctx);
    auto& s = c.data.spec;
    read_optional(*it, "seed", s.seed, ctx);
    read_optional(*it, "n_pairs", s.n_pairs, ctx);
    read_optional(*it, "height", s.height, ctx);
    read_optional(*it, "width", s.width, ctx);
    std::string comp = rain::to_string(s.composition);
    read_optional(*it, "composition", comp, ctx);
    s.composition = rain::composition_from_string(comp);
    if (auto r = it->find("ranges"); r != it->end()) s.ranges = rain::ranges_from_json(*r);
    read_optional(*it, "holdout", c.data.holdout, ctx);
  }
  if (auto it = j.find("model"); it != j.end()) c.model = net::model_config_from_json(*it);
  if (auto it = j.find("loss"); it != j.end()) {
    const std::string ctx = "loss";
    require_known_keys(*it, {"w_mse", "w_ssim", "w_perp", "ssim", "perceptual"}, ctx);
    read_optional(*it, "w_mse", c.train.weights.w_mse, ctx);
    read_optional(*it, "w_ssim", c.train.weights.w_ssim, ctx);
    read_optional(*it, "w_perp", c.train.weights.w_perp, ctx);
    if (auto s = it->find("ssim"); s != it->end()) c.train.ssim = objective::ssim_config_from_json(*s);
    if (auto p = it->find("perceptual"); p != it->end()) {
      c.train.perceptual = objective::perceptual_config_from_json(*p);
    }
  }
  if (auto it = j.find("schedule"); it != j.end()) c.train.schedule = train::schedule_from_json(*it);
  if (auto it = j.find("train"); it != j.end()) train::read_train_section(*it, c.train);
  c.train.seed = c.seed;
  c.validate();
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path.string() + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return run_config_from_json(j);
}

void write_json(const std::filesystem::path& path, const json& j) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw IoError(path.string(), "cannot open for writing");
  out << j.dump(2) << '\n';
  if (!out) throw IoError(path.string(), "write failed");
}

}  // namespace dpaf::cli
