#include "dpaf/nn/grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace dpaf::nn {

double relative_error(std::span<const double> a, std::span<const double> b) {
  double diff = 0, na = 0, nb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff += (a[i] - b[i]) * (a[i] - b[i]);
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  const double denom = std::sqrt(std::max(na, nb));
  if (denom == 0.0) return 0.0;
  return std::sqrt(diff) / denom;
}

template <typename T>
GradCheckRow check_gradient(const std::string& name, Tensor<T>& values, const Tensor<T>& analytic,
                            const std::function<T()>& loss, double h) {
  require_same_shape(values, analytic, "check_gradient");
  std::vector<double> numeric(values.size()), exact(values.size());
  const T step = static_cast<T>(h);
  for (std::size_t i = 0; i < values.size(); ++i) {
    const T saved = values[i];
    values[i] = saved + step;
    const double plus = static_cast<double>(loss());
    values[i] = saved - step;
    const double minus = static_cast<double>(loss());
    values[i] = saved;
    numeric[i] = (plus - minus) / (2.0 * h);
    exact[i] = static_cast<double>(analytic[i]);
  }
  return {name, relative_error(exact, numeric), values.size()};
}

template GradCheckRow check_gradient(const std::string&, Tensor<float>&, const Tensor<float>&,
                                     const std::function<float()>&, double);
template GradCheckRow check_gradient(const std::string&, Tensor<double>&, const Tensor<double>&,
                                     const std::function<double()>&, double);

}  // namespace dpaf::nn
