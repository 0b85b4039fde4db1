#include "dpaf/train/trainer.hpp"

#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "dpaf/errors.hpp"
#include "dpaf/json_util.hpp"
#include "dpaf/net/checkpoint.hpp"
#include "dpaf/rain/rain_model.hpp"
#include "dpaf/rng.hpp"

namespace dpaf::train {

namespace {

constexpr std::uint64_t kShuffleStream = 0x5348554646ULL;
constexpr std::uint64_t kPatchStream = 0x5041544348ULL;

}  // namespace

void TrainConfig::validate() const {
  if (batch == 0) throw ConfigError("batch must be at least 1");
  if (!(clip_grad_norm >= 0)) throw ConfigError("clip_grad_norm must be non-negative");
  if (!(adam.beta1 >= 0 && adam.beta1 < 1 && adam.beta2 >= 0 && adam.beta2 < 1 && adam.eps > 0)) {
    throw ConfigError("adam betas must lie in [0, 1) and eps must be positive");
  }
  schedule.validate();
  weights.validate();
  ssim.validate();
  perceptual.validate();
}

nlohmann::json train_section_to_json(const TrainConfig& c) {
  return {{"batch", c.batch},
          {"patch", c.patch},
          {"hflip", c.hflip},
          {"checkpoint_every", c.checkpoint_every},
          {"max_steps", c.max_steps},
          {"clip_grad_norm", c.clip_grad_norm},
          {"adam", {{"beta1", c.adam.beta1}, {"beta2", c.adam.beta2}, {"eps", c.adam.eps}}}};
}

void read_train_section(const nlohmann::json& j, TrainConfig& c) {
  const std::string ctx = "train";
  require_known_keys(j, {"batch", "patch", "hflip", "checkpoint_every", "max_steps", "clip_grad_norm", "adam"}, ctx);
  read_optional(j, "batch", c.batch, ctx);
  read_optional(j, "patch", c.patch, ctx);
  read_optional(j, "hflip", c.hflip, ctx);
  read_optional(j, "checkpoint_every", c.checkpoint_every, ctx);
  read_optional(j, "max_steps", c.max_steps, ctx);
  read_optional(j, "clip_grad_norm", c.clip_grad_norm, ctx);
  if (auto it = j.find("adam"); it != j.end()) {
    require_known_keys(*it, {"beta1", "beta2", "eps"}, "train.adam");
    read_optional(*it, "beta1", c.adam.beta1, "train.adam");
    read_optional(*it, "beta2", c.adam.beta2, "train.adam");
    read_optional(*it, "eps", c.adam.eps, "train.adam");
  }
}

nlohmann::json to_json(const StepRecord& r) {
  nlohmann::json j;
  j["step"] = r.step;
  j["epoch"] = r.epoch;
  j["lr"] = r.lr;
  j["loss_total"] = r.loss.total;
  j["loss_mse"] = r.loss.mse;
  j["loss_ssim"] = r.loss.ssim;
  j["loss_perp"] = r.loss.perp;
  return j;
}

StepRecord step_record_from_json(const nlohmann::json& j) {
  StepRecord r;
  r.step = j.at("step").get<std::size_t>();
  r.epoch = j.at("epoch").get<std::size_t>();
  r.lr = j.at("lr").get<double>();
  r.loss.total = j.at("loss_total").get<double>();
  r.loss.mse = j.at("loss_mse").get<double>();
  r.loss.ssim = j.at("loss_ssim").get<double>();
  r.loss.perp = j.at("loss_perp").get<double>();
  return r;
}

Trainer::Trainer(net::Model<float>& model, std::vector<rain::Sample> data, TrainConfig config)
    : model_(model), data_(std::move(data)), config_(std::move(config)), adam_(model.params(), config_.adam) {
  config_.validate();
  if (data_.empty()) throw ParameterError("training set is empty");
  if (data_.size() < config_.batch) {
    throw ParameterError("training set of " + std::to_string(data_.size()) + " pairs cannot fill a batch of " +
                         std::to_string(config_.batch));
  }
  steps_per_epoch_ = data_.size() / config_.batch;
  const std::size_t m = model.config().downsample();
  for (const auto& s : data_) {
    const std::size_t h = s.rainy.dim(1), w = s.rainy.dim(2);
    const std::size_t need_h = config_.patch ? config_.patch : h, need_w = config_.patch ? config_.patch : w;
    if (config_.patch && (config_.patch > h || config_.patch > w)) {
      throw ConfigError("patch " + std::to_string(config_.patch) + " exceeds image '" + s.id + "' (" +
                        std::to_string(h) + "x" + std::to_string(w) + ")");
    }
    if (need_h % m != 0 || need_w % m != 0) {
      throw ConfigError("training crops must be divisible by " + std::to_string(m) + " (pair '" + s.id + "')");
    }
  }
  if (config_.weights.w_perp > 0) {
    extractor_ = std::make_unique<objective::PerceptualExtractor<float>>(config_.perceptual);
  }
}

std::size_t Trainer::total_steps() const noexcept {
  const std::size_t full = config_.schedule.total_epochs * steps_per_epoch_;
  return config_.max_steps ? std::min(full, config_.max_steps) : full;
}

std::vector<std::size_t> Trainer::epoch_order(std::size_t epoch) const {
  std::vector<std::size_t> order(data_.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(derive_seed(derive_seed(config_.seed, kShuffleStream), epoch));
  for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.index(i)]);
  return order;
}

std::pair<Tensor<float>, Tensor<float>> Trainer::batch(std::size_t step) const {
  const std::size_t epoch = step / steps_per_epoch_;
  const std::size_t offset = (step % steps_per_epoch_) * config_.batch;
  if (epoch != cached_epoch_) {
    cached_order_ = epoch_order(epoch);
    cached_epoch_ = epoch;
  }
  const std::uint64_t step_seed = derive_seed(derive_seed(config_.seed, kPatchStream), step);
  std::vector<Tensor<float>> rainy, clean;
  for (std::size_t slot = 0; slot < config_.batch; ++slot) {
    const auto& s = data_[cached_order_[offset + slot]];
    if (config_.patch == 0) {
      const bool flip = config_.hflip && Rng(derive_seed(step_seed, slot)).bernoulli(0.5);
      rainy.push_back(flip ? rain::flip_horizontal(s.rainy) : s.rainy);
      clean.push_back(flip ? rain::flip_horizontal(s.clean) : s.clean);
      continue;
    }
    auto patch = rain::sample_training_patch(s.rainy, s.clean, config_.patch, derive_seed(step_seed, slot), config_.hflip);
    rainy.push_back(std::move(patch.rainy));
    clean.push_back(std::move(patch.clean));
  }
  return {stack_batch<float>(rainy), stack_batch<float>(clean)};
}

StepRecord Trainer::train_step() {
  if (done()) throw TrainingError("training already finished at step " + std::to_string(step_));
  StepRecord rec;
  rec.step = step_;
  rec.epoch = step_ / steps_per_epoch_;
  rec.lr = lr_at(config_.schedule, step_, steps_per_epoch_);

  auto [rainy, clean] = batch(step_);
  net::Model<float>::Cache cache;
  const Tensor<float> pred = model_.forward(rainy, &cache);
  Tensor<float> grad;
  rec.loss = objective::combined_loss(pred, clean, config_.weights, config_.ssim, extractor_.get(), &grad);
  if (!std::isfinite(rec.loss.total)) {
    std::ostringstream msg;
    msg << "non-finite loss at step " << step_ << " (epoch " << rec.epoch << "): total " << rec.loss.total
        << ", mse " << rec.loss.mse << ", ssim " << rec.loss.ssim << ", perceptual " << rec.loss.perp;
    throw TrainingError(msg.str());
  }

  auto& params = model_.params();
  params.zero_grad();
  model_.backward(cache, grad);

  double norm2 = 0.0;
  for (std::size_t i = 0; i < params.entries(); ++i) {
    for (float g : params.at(i).grad.values()) norm2 += static_cast<double>(g) * g;
  }
  if (!std::isfinite(norm2)) {
    throw TrainingError("non-finite gradient at step " + std::to_string(step_) + " (epoch " +
                        std::to_string(rec.epoch) + ")");
  }
  if (config_.clip_grad_norm > 0 && std::sqrt(norm2) > config_.clip_grad_norm) {
    const float s = static_cast<float>(config_.clip_grad_norm / std::sqrt(norm2));
    for (std::size_t i = 0; i < params.entries(); ++i) {
      for (float& g : params.at(i).grad.values()) g *= s;
    }
  }
  adam_.step(params, rec.lr);

  ++step_;
  history_.push_back(rec);
  if (history_.size() > kHistory) history_.pop_front();
  return rec;
}

nn::Container Trainer::checkpoint() const {
  nn::Container c = net::model_to_container(model_);
  adam_.save(c, model_.params());
  nlohmann::json state;
  state["step"] = step_;
  state["epoch"] = step_ / steps_per_epoch_;
  state["seed"] = config_.seed;
  state["steps_per_epoch"] = steps_per_epoch_;
  state["lr_next"] = lr_at(config_.schedule, step_, steps_per_epoch_);
  state["schedule"] = to_json(config_.schedule);
  nlohmann::json hist = nlohmann::json::array();
  for (const auto& r : history_) hist.push_back(to_json(r));
  state["history"] = std::move(hist);
  c.add_text("meta/train_state", state.dump());
  return c;
}

void Trainer::restore(const nn::Container& c) {
  const net::ModelConfig stored = net::config_from_container(c);
  if (!(stored == model_.config())) {
    throw ConfigError("checkpoint model config " + net::to_json(stored).dump() + " differs from " +
                      net::to_json(model_.config()).dump());
  }
  if (!c.contains("meta/train_state")) throw ConfigError("checkpoint has no meta/train_state entry");
  const auto state = nlohmann::json::parse(c.text("meta/train_state"));
  if (state.at("seed").get<std::uint64_t>() != config_.seed) {
    throw ConfigError("checkpoint was trained with seed " + std::to_string(state.at("seed").get<std::uint64_t>()) +
                      ", this run uses " + std::to_string(config_.seed));
  }
  if (state.at("steps_per_epoch").get<std::size_t>() != steps_per_epoch_) {
    throw ConfigError("checkpoint steps_per_epoch differs from this dataset/batch combination");
  }
  nn::restore_params(c, model_.params(), net::kModelPrefix);
  adam_.restore(c, model_.params());
  step_ = state.at("step").get<std::size_t>();
  history_.clear();
  for (const auto& r : state.at("history")) history_.push_back(step_record_from_json(r));
}

std::vector<StepRecord> run_training(Trainer& trainer, const TrainHooks& hooks) {
  std::vector<StepRecord> records;
  const bool write = !hooks.checkpoint_dir.empty();
  if (write) std::filesystem::create_directories(hooks.checkpoint_dir);
  const std::size_t spe = trainer.steps_per_epoch();
  const std::size_t every = trainer.config().checkpoint_every;
  while (!trainer.done()) {
    records.push_back(trainer.train_step());
    if (hooks.on_step) hooks.on_step(records.back());
    const std::size_t s = trainer.step();
    if (write && every > 0 && s % spe == 0 && (s / spe) % every == 0) {
      char name[32];
      std::snprintf(name, sizeof name, "epoch_%04zu.ckpt", s / spe);
      trainer.checkpoint().write(hooks.checkpoint_dir / name);
    }
  }
  if (write) trainer.checkpoint().write(hooks.checkpoint_dir / "last.ckpt");
  return records;
}

void write_trace_line(std::ostream& out, const StepRecord& r) { out << to_json(r).dump() << '\n'; }

std::vector<StepRecord> read_trace(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError(path.string(), "cannot open loss trace");
  std::vector<StepRecord> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    try {
      out.push_back(step_record_from_json(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::exception& e) {
      throw IoError(path.string(), std::string("malformed trace line: ") + e.what());
    }
  }
  return out;
}

}  // namespace dpaf::train
