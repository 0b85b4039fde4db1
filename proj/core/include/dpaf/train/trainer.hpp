#pragma once

#include <cstdint>
#include <deque>
#include <filesystem>
#include <functional>
#include <memory>
#include <ostream>
#include <vector>

#include <nlohmann/json.hpp>

#include "dpaf/net/model.hpp"
#include "dpaf/nn/serialize.hpp"
#include "dpaf/objective/losses.hpp"
#include "dpaf/rain/dataset.hpp"
#include "dpaf/train/adam.hpp"
#include "dpaf/train/schedule.hpp"

namespace dpaf::train {

struct TrainConfig {
  std::size_t batch = 3;
  /// Square crop side; 0 trains on whole images.
  std::size_t patch = 64;
  bool hflip = true;
  std::uint64_t seed = 0;
  /// Write a checkpoint every k epochs (0 disables periodic checkpoints).
  std::size_t checkpoint_every = 0;
  /// Stop after this many steps (0 runs the full schedule).
  std::size_t max_steps = 0;
  /// Global gradient-norm clip (0 disables).
  double clip_grad_norm = 0.0;

  Schedule schedule;
  AdamConfig adam;
  objective::LossWeights weights;
  objective::SsimConfig ssim;
  objective::PerceptualConfig perceptual;

  void validate() const;
};

/// Keys: batch, patch, hflip, checkpoint_every, max_steps, clip_grad_norm,
/// adam {beta1, beta2, eps}. Seed, schedule and loss live in their own
/// sections and are filled in by the caller.
nlohmann::json train_section_to_json(const TrainConfig& c);
void read_train_section(const nlohmann::json& j, TrainConfig& c);

struct StepRecord {
  std::size_t step = 0;
  std::size_t epoch = 0;
  double lr = 0.0;
  objective::LossBreakdown loss;
};

nlohmann::json to_json(const StepRecord& r);
StepRecord step_record_from_json(const nlohmann::json& j);

/// Owns the optimization state for one model. Every step is a pure function
/// of (seed, step index, parameters, optimizer moments): the sample order of
/// epoch e is a seeded shuffle of (seed, e) and each item's crop/flip is
/// seeded by (seed, step, slot), so a restored trainer continues exactly
/// where the saved one left off.
class Trainer {
 public:
  static constexpr std::size_t kHistory = 64;

  /// Throws ParameterError when the dataset cannot fill one batch and
  /// ConfigError when the crop is incompatible with the model.
  Trainer(net::Model<float>& model, std::vector<rain::Sample> data, TrainConfig config);

  std::size_t steps_per_epoch() const noexcept { return steps_per_epoch_; }
  /// Steps in the whole schedule, capped by max_steps.
  std::size_t total_steps() const noexcept;
  std::size_t step() const noexcept { return step_; }
  bool done() const noexcept { return step_ >= total_steps(); }
  const TrainConfig& config() const noexcept { return config_; }
  const std::deque<StepRecord>& history() const noexcept { return history_; }
  const Adam<float>& optimizer() const noexcept { return adam_; }

  /// Sample indices of epoch `epoch` in training order.
  std::vector<std::size_t> epoch_order(std::size_t epoch) const;
  /// Stacked (rainy, clean) batch for a step.
  std::pair<Tensor<float>, Tensor<float>> batch(std::size_t step) const;

  /// Runs one optimization step. Throws TrainingError naming the step when
  /// the loss or the gradients are not finite.
  StepRecord train_step();

  /// Model checkpoint plus optimizer moments and "meta/train_state".
  nn::Container checkpoint() const;
  /// Restores parameters, moments, step counter and history. The container's
  /// model config must equal this trainer's model config.
  void restore(const nn::Container& c);

 private:
  net::Model<float>& model_;
  std::vector<rain::Sample> data_;
  TrainConfig config_;
  std::size_t steps_per_epoch_;
  Adam<float> adam_;
  std::unique_ptr<objective::PerceptualExtractor<float>> extractor_;
  std::size_t step_ = 0;
  std::deque<StepRecord> history_;
  mutable std::size_t cached_epoch_ = static_cast<std::size_t>(-1);
  mutable std::vector<std::size_t> cached_order_;
};

struct TrainHooks {
  /// Receives every record (e.g. to append to a loss trace).
  std::function<void(const StepRecord&)> on_step;
  /// Where periodic and final checkpoints go; empty disables writing.
  std::filesystem::path checkpoint_dir;
};

/// Runs `trainer` to completion, writing "epoch_<e>.ckpt" every
/// checkpoint_every epochs and "last.ckpt" at the end.
std::vector<StepRecord> run_training(Trainer& trainer, const TrainHooks& hooks = {});

/// One JSON object per line, doubles at full round-trip precision.
void write_trace_line(std::ostream& out, const StepRecord& r);
std::vector<StepRecord> read_trace(const std::filesystem::path& path);

}  // namespace dpaf::train
