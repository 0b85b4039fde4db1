#pragma once

#include <cstddef>

#include <nlohmann/json.hpp>

namespace dpaf::train {

struct Schedule {
  double lr_init = 2e-4;
  double lr_final = 1e-6;
  std::size_t total_epochs = 200;
  std::size_t warmup_steps = 500;

  void validate() const;
  bool operator==(const Schedule&) const = default;
};

nlohmann::json to_json(const Schedule& s);
Schedule schedule_from_json(const nlohmann::json& j);

/// Linear ramp from 0 at step 0 to lr_init at warmup_steps, then a cosine
/// from lr_init down to lr_final at the last step of the run
/// (total_epochs * steps_per_epoch - 1), and lr_final from there on.
double lr_at(const Schedule& s, std::size_t step, std::size_t steps_per_epoch);

}  // namespace dpaf::train
