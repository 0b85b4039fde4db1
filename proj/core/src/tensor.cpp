#include "dpaf/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace dpaf {

std::size_t shape_size(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string shape_string(const Shape& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += "x";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

template <typename T>
Tensor<T> Tensor<T>::reshaped(Shape shape) const& {
  Tensor copy = *this;
  return std::move(copy).reshaped(std::move(shape));
}

template <typename T>
Tensor<T> Tensor<T>::reshaped(Shape shape) && {
  if (shape_size(shape) != data_.size()) {
    throw ShapeError("cannot reshape " + shape_string(shape_) + " to " + shape_string(shape));
  }
  shape_ = std::move(shape);
  return std::move(*this);
}

template <typename T>
void require_same_shape(const Tensor<T>& a, const Tensor<T>& b, const char* what) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(what) + ": shape mismatch " + shape_string(a.shape()) + " vs " +
                     shape_string(b.shape()));
  }
}

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
  Tensor<T> out = a;
  add_inplace(out, b);
  return out;
}

template <typename T>
void add_inplace(Tensor<T>& acc, const Tensor<T>& b) {
  require_same_shape(acc, b, "add");
  for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += b[i];
}

template <typename T>
Tensor<T> subtract(const Tensor<T>& a, const Tensor<T>& b) {
  require_same_shape(a, b, "subtract");
  Tensor<T> out(a.shape());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] - b[i];
  return out;
}

template <typename T>
Tensor<T> scale(const Tensor<T>& a, T s) {
  Tensor<T> out = a;
  for (auto& v : out.values()) v *= s;
  return out;
}

template <typename T>
Tensor<T> concat_channels(const Tensor<T>& a, const Tensor<T>& b) {
  if (a.rank() != 4 || b.rank() != 4 || a.dim(0) != b.dim(0) || a.dim(2) != b.dim(2) ||
      a.dim(3) != b.dim(3)) {
    throw ShapeError("concat_channels: incompatible " + shape_string(a.shape()) + " and " +
                     shape_string(b.shape()));
  }
  const std::size_t n = a.dim(0), ca = a.dim(1), cb = b.dim(1), hw = a.dim(2) * a.dim(3);
  Tensor<T> out({n, ca + cb, a.dim(2), a.dim(3)});
  for (std::size_t i = 0; i < n; ++i) {
    std::copy_n(a.data() + i * ca * hw, ca * hw, out.data() + i * (ca + cb) * hw);
    std::copy_n(b.data() + i * cb * hw, cb * hw, out.data() + i * (ca + cb) * hw + ca * hw);
  }
  return out;
}

template <typename T>
void split_channels(const Tensor<T>& x, std::size_t first_channels, Tensor<T>& a, Tensor<T>& b) {
  if (x.rank() != 4 || first_channels > x.dim(1)) {
    throw ShapeError("split_channels: bad split of " + shape_string(x.shape()));
  }
  const std::size_t n = x.dim(0), c = x.dim(1), hw = x.dim(2) * x.dim(3);
  const std::size_t ca = first_channels, cb = c - first_channels;
  a = Tensor<T>({n, ca, x.dim(2), x.dim(3)});
  b = Tensor<T>({n, cb, x.dim(2), x.dim(3)});
  for (std::size_t i = 0; i < n; ++i) {
    std::copy_n(x.data() + i * c * hw, ca * hw, a.data() + i * ca * hw);
    std::copy_n(x.data() + i * c * hw + ca * hw, cb * hw, b.data() + i * cb * hw);
  }
}

template <typename T>
Tensor<T> batch_item(const Tensor<T>& x, std::size_t n) {
  if (x.rank() != 4 || n >= x.dim(0)) throw ShapeError("batch_item: index out of range");
  const std::size_t per = x.size() / x.dim(0);
  Tensor<T> out({1, x.dim(1), x.dim(2), x.dim(3)});
  std::copy_n(x.data() + n * per, per, out.data());
  return out;
}

template <typename T>
Tensor<T> stack_batch(std::span<const Tensor<T>> items) {
  if (items.empty()) throw ShapeError("stack_batch: no items");
  Shape inner = items.front().shape();
  if (inner.size() == 4) {
    if (inner[0] != 1) throw ShapeError("stack_batch: items must have batch 1");
    inner.erase(inner.begin());
  }
  if (inner.size() != 3) throw ShapeError("stack_batch: items must be CHW");
  const std::size_t per = shape_size(inner);
  Tensor<T> out({items.size(), inner[0], inner[1], inner[2]});
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (items[i].size() != per) throw ShapeError("stack_batch: item shapes differ");
    std::copy_n(items[i].data(), per, out.data() + i * per);
  }
  return out;
}

template <typename T>
T sum(const Tensor<T>& a) {
  T s = 0;
  for (T v : a.values()) s += v;
  return s;
}

template <typename T>
T dot(const Tensor<T>& a, const Tensor<T>& b) {
  require_same_shape(a, b, "dot");
  T s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

template <typename T>
bool all_finite(const Tensor<T>& a) {
  return std::all_of(a.values().begin(), a.values().end(), [](T v) { return std::isfinite(v); });
}

#define DPAF_INSTANTIATE(T)                                                                    \
  template class Tensor<T>;                                                                    \
  template void require_same_shape(const Tensor<T>&, const Tensor<T>&, const char*);          \
  template Tensor<T> add(const Tensor<T>&, const Tensor<T>&);                                  \
  template void add_inplace(Tensor<T>&, const Tensor<T>&);                                     \
  template Tensor<T> subtract(const Tensor<T>&, const Tensor<T>&);                             \
  template Tensor<T> scale(const Tensor<T>&, T);                                               \
  template Tensor<T> concat_channels(const Tensor<T>&, const Tensor<T>&);                      \
  template void split_channels(const Tensor<T>&, std::size_t, Tensor<T>&, Tensor<T>&);         \
  template Tensor<T> batch_item(const Tensor<T>&, std::size_t);                                \
  template Tensor<T> stack_batch(std::span<const Tensor<T>>);                                  \
  template T sum(const Tensor<T>&);                                                            \
  template T dot(const Tensor<T>&, const Tensor<T>&);                                          \
  template bool all_finite(const Tensor<T>&);

DPAF_INSTANTIATE(float)
DPAF_INSTANTIATE(double)
#undef DPAF_INSTANTIATE

}  // namespace dpaf
