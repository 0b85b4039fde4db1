#include "dpaf/nn/params.hpp"

#include <cmath>

#include "dpaf/rng.hpp"

namespace dpaf::nn {

template <typename T>
Param<T>& ParamStore<T>::add(const std::string& name, Shape shape) {
  if (index_.count(name)) throw ConfigError("duplicate parameter name: " + name);
  auto p = std::make_unique<Param<T>>();
  p->name = name;
  p->value = Tensor<T>(shape);
  p->grad = Tensor<T>(std::move(shape));
  index_.emplace(name, params_.size());
  params_.push_back(std::move(p));
  return *params_.back();
}

template <typename T>
Param<T>& ParamStore<T>::get(const std::string& name) {
  auto it = index_.find(name);
  if (it == index_.end()) throw LookupError("unknown parameter: " + name);
  return *params_[it->second];
}

template <typename T>
const Param<T>& ParamStore<T>::get(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw LookupError("unknown parameter: " + name);
  return *params_[it->second];
}

template <typename T>
std::size_t ParamStore<T>::scalar_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p->value.size();
  return n;
}

template <typename T>
void ParamStore<T>::zero_grad() {
  for (auto& p : params_) p->grad.fill(T(0));
}

template <typename T>
void init_uniform(Param<T>& p, double bound, std::uint64_t seed) {
  Rng rng(derive_seed(seed, hash_name(p.name)));
  for (auto& v : p.value.values()) v = static_cast<T>(rng.uniform(-bound, bound));
}

template <typename T>
void init_uniform_fan_in(Param<T>& p, std::size_t fan_in, std::uint64_t seed, double gain) {
  init_uniform(p, gain * std::sqrt(3.0 / static_cast<double>(fan_in)), seed);
}

template class ParamStore<float>;
template class ParamStore<double>;
template void init_uniform(Param<float>&, double, std::uint64_t);
template void init_uniform(Param<double>&, double, std::uint64_t);
template void init_uniform_fan_in(Param<float>&, std::size_t, std::uint64_t, double);
template void init_uniform_fan_in(Param<double>&, std::size_t, std::uint64_t, double);

}  // namespace dpaf::nn
