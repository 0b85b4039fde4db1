#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "dpaf/errors.hpp"

namespace dpaf {

using Shape = std::vector<std::size_t>;

std::size_t shape_size(const Shape& shape);
std::string shape_string(const Shape& shape);

/// Dense row-major N-dimensional array. Images use N x C x H x W.
template <typename T>
class Tensor {
 public:
  using value_type = T;

  Tensor() = default;
  explicit Tensor(Shape shape, T fill = T(0))
      : shape_(std::move(shape)), data_(shape_size(shape_), fill) {}
  Tensor(Shape shape, std::vector<T> data) : shape_(std::move(shape)), data_(std::move(data)) {
    if (data_.size() != shape_size(shape_)) {
      throw ShapeError("tensor data length " + std::to_string(data_.size()) +
                       " does not match shape " + shape_string(shape_));
    }
  }

  const Shape& shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t dim(std::size_t axis) const { return shape_.at(axis); }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  T* data() noexcept { return data_.data(); }
  const T* data() const noexcept { return data_.data(); }
  std::span<T> values() noexcept { return data_; }
  std::span<const T> values() const noexcept { return data_; }
  std::vector<T>& storage() noexcept { return data_; }
  const std::vector<T>& storage() const noexcept { return data_; }

  T& operator[](std::size_t i) noexcept { return data_[i]; }
  const T& operator[](std::size_t i) const noexcept { return data_[i]; }

  // NCHW accessors; no bounds checks.
  T& at(std::size_t n, std::size_t c, std::size_t h, std::size_t w) noexcept {
    return data_[((n * shape_[1] + c) * shape_[2] + h) * shape_[3] + w];
  }
  const T& at(std::size_t n, std::size_t c, std::size_t h, std::size_t w) const noexcept {
    return data_[((n * shape_[1] + c) * shape_[2] + h) * shape_[3] + w];
  }

  void fill(T v) { std::fill(data_.begin(), data_.end(), v); }

  /// Same data, new shape with equal element count.
  Tensor reshaped(Shape shape) const&;
  Tensor reshaped(Shape shape) &&;

  template <typename U>
  Tensor<U> cast() const {
    Tensor<U> out(shape_);
    for (std::size_t i = 0; i < data_.size(); ++i) out[i] = static_cast<U>(data_[i]);
    return out;
  }

  bool operator==(const Tensor& other) const = default;

 private:
  Shape shape_;
  std::vector<T> data_;
};

// Elementwise helpers used throughout the blocks.
template <typename T>
void require_same_shape(const Tensor<T>& a, const Tensor<T>& b, const char* what);

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b);

template <typename T>
void add_inplace(Tensor<T>& acc, const Tensor<T>& b);

template <typename T>
Tensor<T> subtract(const Tensor<T>& a, const Tensor<T>& b);

template <typename T>
Tensor<T> scale(const Tensor<T>& a, T s);

/// Concatenates two NCHW tensors along the channel axis.
template <typename T>
Tensor<T> concat_channels(const Tensor<T>& a, const Tensor<T>& b);

/// Inverse of concat_channels: first `first_channels` channels go to `a`.
template <typename T>
void split_channels(const Tensor<T>& x, std::size_t first_channels, Tensor<T>& a, Tensor<T>& b);

/// Extracts batch item `n` as a 1 x C x H x W tensor.
template <typename T>
Tensor<T> batch_item(const Tensor<T>& x, std::size_t n);

/// Stacks equally shaped C x H x W or 1 x C x H x W tensors into N x C x H x W.
template <typename T>
Tensor<T> stack_batch(std::span<const Tensor<T>> items);

template <typename T>
T sum(const Tensor<T>& a);

template <typename T>
T dot(const Tensor<T>& a, const Tensor<T>& b);

template <typename T>
bool all_finite(const Tensor<T>& a);

}  // namespace dpaf
