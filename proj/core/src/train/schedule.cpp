#include "dpaf/train/schedule.hpp"

#include <cmath>
#include <numbers>

#include "dpaf/errors.hpp"
#include "dpaf/json_util.hpp"

namespace dpaf::train {

void Schedule::validate() const {
  if (!(lr_init > 0) || !std::isfinite(lr_init)) throw ConfigError("lr_init must be positive");
  if (!(lr_final >= 0) || lr_final > lr_init) throw ConfigError("lr_final must lie in [0, lr_init]");
  if (total_epochs == 0) throw ConfigError("total_epochs must be positive");
}

nlohmann::json to_json(const Schedule& s) {
  return {{"lr_init", s.lr_init},
          {"lr_final", s.lr_final},
          {"total_epochs", s.total_epochs},
          {"warmup_steps", s.warmup_steps}};
}

Schedule schedule_from_json(const nlohmann::json& j) {
  const std::string ctx = "schedule";
  require_known_keys(j, {"lr_init", "lr_final", "total_epochs", "warmup_steps"}, ctx);
  Schedule s;
  read_optional(j, "lr_init", s.lr_init, ctx);
  read_optional(j, "lr_final", s.lr_final, ctx);
  read_optional(j, "total_epochs", s.total_epochs, ctx);
  read_optional(j, "warmup_steps", s.warmup_steps, ctx);
  s.validate();
  return s;
}

double lr_at(const Schedule& s, std::size_t step, std::size_t steps_per_epoch) {
  if (step < s.warmup_steps) {
    return s.lr_init * static_cast<double>(step) / static_cast<double>(s.warmup_steps);
  }
  const std::size_t total = s.total_epochs * steps_per_epoch;
  const std::size_t last = total == 0 ? 0 : total - 1;
  if (step == s.warmup_steps && last > s.warmup_steps) return s.lr_init;
  if (step >= last) return s.lr_final;
  const double t = static_cast<double>(step - s.warmup_steps) / static_cast<double>(last - s.warmup_steps);
  return s.lr_final + (s.lr_init - s.lr_final) * 0.5 * (1.0 + std::cos(std::numbers::pi * t));
}

}  // namespace dpaf::train
