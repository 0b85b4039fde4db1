#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "dpaf/tensor.hpp"

namespace dpaf::nn {

template <typename T>
struct Param {
  std::string name;
  Tensor<T> value;
  Tensor<T> grad;
};

/// Owns every named parameter of a model. Addresses of registered
/// parameters stay valid for the lifetime of the store (including moves).
template <typename T>
class ParamStore {
 public:
  ParamStore() = default;
  ParamStore(const ParamStore&) = delete;
  ParamStore& operator=(const ParamStore&) = delete;
  ParamStore(ParamStore&&) noexcept = default;
  ParamStore& operator=(ParamStore&&) noexcept = default;

  /// Registers a zero-filled parameter. Duplicate names are rejected.
  Param<T>& add(const std::string& name, Shape shape);

  Param<T>& get(const std::string& name);
  const Param<T>& get(const std::string& name) const;
  bool contains(const std::string& name) const { return index_.count(name) != 0; }

  /// Registration order.
  std::size_t entries() const noexcept { return params_.size(); }
  Param<T>& at(std::size_t i) { return *params_[i]; }
  const Param<T>& at(std::size_t i) const { return *params_[i]; }

  /// Total number of scalar parameters.
  std::size_t scalar_count() const;

  void zero_grad();

 private:
  std::vector<std::unique_ptr<Param<T>>> params_;
  std::map<std::string, std::size_t> index_;
};

/// Uniform fan-in scaled initialization: U(-b, b) with b = gain * sqrt(3 / fan_in).
/// The stream depends only on (seed, parameter name), so models that share a
/// parameter name get identical values for it regardless of what else they hold.
template <typename T>
void init_uniform_fan_in(Param<T>& p, std::size_t fan_in, std::uint64_t seed, double gain = 1.0);

template <typename T>
void init_uniform(Param<T>& p, double bound, std::uint64_t seed);

}  // namespace dpaf::nn
