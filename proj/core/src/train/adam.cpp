#include "dpaf/train/adam.hpp"

#include <cmath>

#include "dpaf/errors.hpp"

namespace dpaf::train {

template <typename T>
Adam<T>::Adam(const nn::ParamStore<T>& params, AdamConfig config) : config_(config) {
  for (std::size_t i = 0; i < params.entries(); ++i) {
    m_.emplace_back(params.at(i).value.shape());
    v_.emplace_back(params.at(i).value.shape());
  }
}

template <typename T>
void Adam<T>::step(nn::ParamStore<T>& params, double lr) {
  if (params.entries() != m_.size()) {
    throw ShapeError("optimizer tracks " + std::to_string(m_.size()) + " tensors but the store holds " +
                     std::to_string(params.entries()));
  }
  for (std::size_t i = 0; i < params.entries(); ++i) {
    const auto& p = params.at(i);
    if (p.value.shape() != m_[i].shape() || p.grad.shape() != p.value.shape()) {
      throw ShapeError("optimizer state for '" + p.name + "' has shape " + shape_string(m_[i].shape()) +
                       ", parameter " + shape_string(p.value.shape()) + ", gradient " + shape_string(p.grad.shape()));
    }
  }
  ++steps_;
  const double b1 = config_.beta1, b2 = config_.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(steps_));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(steps_));
  for (std::size_t i = 0; i < params.entries(); ++i) {
    auto& p = params.at(i);
    T* w = p.value.data();
    const T* g = p.grad.data();
    T* m = m_[i].data();
    T* v = v_[i].data();
    for (std::size_t k = 0; k < p.value.size(); ++k) {
      const double gk = static_cast<double>(g[k]);
      const double mk = b1 * static_cast<double>(m[k]) + (1.0 - b1) * gk;
      const double vk = b2 * static_cast<double>(v[k]) + (1.0 - b2) * gk * gk;
      m[k] = static_cast<T>(mk);
      v[k] = static_cast<T>(vk);
      const double update = lr * (mk / c1) / (std::sqrt(vk / c2) + config_.eps);
      w[k] = static_cast<T>(static_cast<double>(w[k]) - update);
    }
  }
}

template <typename T>
void Adam<T>::save(nn::Container& c, const nn::ParamStore<T>& params, const std::string& prefix) const {
  for (std::size_t i = 0; i < params.entries(); ++i) {
    c.add_tensor(prefix + "m/" + params.at(i).name, m_[i]);
    c.add_tensor(prefix + "v/" + params.at(i).name, v_[i]);
  }
  c.add_text(prefix + "steps", std::to_string(steps_));
}

template <typename T>
void Adam<T>::restore(const nn::Container& c, const nn::ParamStore<T>& params, const std::string& prefix) {
  std::vector<Tensor<T>> m, v;
  for (std::size_t i = 0; i < params.entries(); ++i) {
    const auto& p = params.at(i);
    for (const char* kind : {"m/", "v/"}) {
      const std::string key = prefix + kind + p.name;
      if (!c.contains(key)) throw ConfigError("checkpoint is missing optimizer entry '" + key + "'");
      Tensor<T> t = c.tensor<T>(key);
      if (t.shape() != p.value.shape()) {
        throw ConfigError("optimizer entry '" + key + "' has shape " + shape_string(t.shape()) + ", expected " +
                          shape_string(p.value.shape()));
      }
      (kind[0] == 'm' ? m : v).push_back(std::move(t));
    }
  }
  if (!c.contains(prefix + "steps")) throw ConfigError("checkpoint is missing '" + prefix + "steps'");
  steps_ = std::stoull(c.text(prefix + "steps"));
  m_ = std::move(m);
  v_ = std::move(v);
}

template class Adam<float>;
template class Adam<double>;

}  // namespace dpaf::train
