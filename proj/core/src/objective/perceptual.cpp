#include "dpaf/objective/perceptual.hpp"

#include <cmath>

#include "dpaf/errors.hpp"
#include "dpaf/json_util.hpp"
#include "dpaf/nn/ops.hpp"

namespace dpaf::objective {

void PerceptualConfig::validate() const {
  if (widths.empty()) throw ConfigError("perceptual widths must not be empty");
  for (auto w : widths) {
    if (w == 0) throw ConfigError("perceptual widths must be positive");
  }
  if (tap < 1 || tap > widths.size()) {
    throw ConfigError("perceptual tap " + std::to_string(tap) + " outside [1, " + std::to_string(widths.size()) + "]");
  }
}

nlohmann::json to_json(const PerceptualConfig& c) {
  return {{"widths", c.widths}, {"tap", c.tap}, {"seed", c.seed}, {"weights", c.weights}};
}

PerceptualConfig perceptual_config_from_json(const nlohmann::json& j) {
  const std::string ctx = "loss.perceptual";
  require_known_keys(j, {"widths", "tap", "seed", "weights"}, ctx);
  PerceptualConfig c;
  read_optional(j, "widths", c.widths, ctx);
  read_optional(j, "tap", c.tap, ctx);
  read_optional(j, "seed", c.seed, ctx);
  read_optional(j, "weights", c.weights, ctx);
  c.validate();
  return c;
}

template <typename T>
PerceptualExtractor<T>::PerceptualExtractor(const PerceptualConfig& config) : config_(config) {
  config_.validate();
  std::size_t in = 3;
  for (std::size_t i = 0; i < config_.widths.size(); ++i) {
    const std::string name = "stage" + std::to_string(i + 1);
    auto& w = store_.add(name + ".weight", {config_.widths[i], in, 3, 3});
    // ReLU gain keeps activations from shrinking stage over stage.
    nn::init_uniform_fan_in(w, in * 9, config_.seed, std::sqrt(2.0));
    weights_.push_back(&w);
    biases_.push_back(&store_.add(name + ".bias", {config_.widths[i]}));
    in = config_.widths[i];
  }
  if (!config_.weights.empty()) load(nn::Container::read(config_.weights));
}

template <typename T>
void PerceptualExtractor<T>::load(const nn::Container& c) {
  nn::restore_params(c, store_);
}

template <typename T>
void PerceptualExtractor<T>::check_resolution(const Tensor<T>& x) const {
  if (x.rank() != 4 || x.dim(1) != 3) {
    throw ShapeError("perceptual extractor expects N x 3 x H x W, got " + shape_string(x.shape()));
  }
  const std::size_t need = std::size_t{1} << (config_.tap - 1);
  if (x.dim(2) < need || x.dim(3) < need) {
    throw ParameterError("input " + std::to_string(x.dim(2)) + "x" + std::to_string(x.dim(3)) +
                         " is too small for perceptual tap " + std::to_string(config_.tap) + " (needs " +
                         std::to_string(need) + ")");
  }
}

template <typename T>
Tensor<T> PerceptualExtractor<T>::run(const Tensor<T>& x, Trace* trace) const {
  Tensor<T> a = x;
  for (std::size_t i = 0; i < config_.tap; ++i) {
    if (i > 0) {
      std::vector<std::size_t> argmax;
      if (trace) trace->pool_in.push_back(a.shape());
      a = nn::max_pool2x2(a, &argmax);
      if (trace) trace->argmax.push_back(std::move(argmax));
    }
    Tensor<T> z = nn::conv2d(a, weights_[i]->value, biases_[i]->value, nn::ConvGeometry{1, 1});
    if (trace) {
      trace->conv_in.push_back(std::move(a));
      trace->pre_relu.push_back(z);
    }
    a = nn::relu(z);
  }
  return a;
}

template <typename T>
Tensor<T> PerceptualExtractor<T>::run_backward(const Trace& trace, Tensor<T> dy) const {
  for (std::size_t i = config_.tap; i-- > 0;) {
    dy = nn::relu_backward(trace.pre_relu[i], dy);
    Tensor<T> dx;
    nn::conv2d_backward(trace.conv_in[i], weights_[i]->value, dy, nn::ConvGeometry{1, 1}, &dx,
                        static_cast<Tensor<T>*>(nullptr), static_cast<Tensor<T>*>(nullptr));
    dy = std::move(dx);
    if (i > 0) dy = nn::max_pool2x2_backward(trace.pool_in[i - 1], trace.argmax[i - 1], dy);
  }
  return dy;
}

template <typename T>
Tensor<T> PerceptualExtractor<T>::features(const Tensor<T>& x) const {
  check_resolution(x);
  return run(x, nullptr);
}

template <typename T>
double PerceptualExtractor<T>::loss(const Tensor<T>& pred, const Tensor<T>& target, Tensor<T>* grad) const {
  require_same_shape(pred, target, "perceptual loss");
  check_resolution(pred);
  Trace trace;
  const Tensor<T> fp = run(pred, grad ? &trace : nullptr);
  const Tensor<T> ft = run(target, nullptr);
  const double norm = 1.0 / static_cast<double>(fp.dim(0) * fp.dim(2) * fp.dim(3));
  double total = 0.0;
  Tensor<T> dfeat;
  if (grad) dfeat = Tensor<T>(fp.shape());
  for (std::size_t i = 0; i < fp.size(); ++i) {
    const double d = static_cast<double>(fp[i]) - static_cast<double>(ft[i]);
    total += d * d;
    if (grad) dfeat[i] = static_cast<T>(2.0 * d * norm);
  }
  if (grad) *grad = run_backward(trace, std::move(dfeat));
  return total * norm;
}

template class PerceptualExtractor<float>;
template class PerceptualExtractor<double>;

}  // namespace dpaf::objective
