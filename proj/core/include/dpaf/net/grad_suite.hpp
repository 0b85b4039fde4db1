#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace dpaf::net {

struct GradSuiteRow {
  std::string scope;
  std::string tensor;  // "input" or a parameter name
  double rel_error = 0.0;
  double tolerance = 0.0;
  std::size_t elements = 0;
  bool pass() const { return rel_error < tolerance; }
};

inline constexpr double kBlockTolerance = 1e-6;
inline constexpr double kModelTolerance = 1e-5;

/// Names accepted by run_grad_check besides "all".
const std::vector<std::string>& grad_check_scopes();

/// Finite-difference checks in double precision on tiny random instances.
/// Each scope builds its block with `seed`, draws a random input and a
/// random weighting R of the output, and compares the analytic gradient of
/// sum(R * output) with central differences (h = 1e-4) for the input and
/// every parameter. Throws LookupError for an unknown scope.
std::vector<GradSuiteRow> run_grad_check(const std::string& scope, std::uint64_t seed = 1);

}  // namespace dpaf::net
