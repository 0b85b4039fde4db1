#pragma once

#include <functional>
#include <span>
#include <string>

#include "dpaf/tensor.hpp"

namespace dpaf::nn {

struct GradCheckRow {
  std::string name;
  double rel_error = 0.0;
  std::size_t elements = 0;
};

/// ||a - b||_2 / max(||a||_2, ||b||_2); zero when both vectors vanish.
double relative_error(std::span<const double> a, std::span<const double> b);

/// Compares `analytic` against central differences (f(v+h) - f(v-h)) / 2h,
/// perturbing each element of `values` in place and restoring it afterwards.
template <typename T>
GradCheckRow check_gradient(const std::string& name, Tensor<T>& values, const Tensor<T>& analytic,
                            const std::function<T()>& loss, double h = 1e-4);

}  // namespace dpaf::nn
