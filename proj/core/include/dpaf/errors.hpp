#pragma once

#include <stdexcept>
#include <string>

namespace dpaf {

/// Tensor or image shapes that cannot be combined.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// An argument outside its documented range.
class ParameterError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Inconsistent model, loss or run configuration.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A named entity (parameter, probe, block) that does not exist.
class LookupError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

class IoError : public std::runtime_error {
 public:
  IoError(const std::string& path, const std::string& what)
      : std::runtime_error(path + ": " + what), path_(path) {}
  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

/// Raised by the training loop when the loss stops being finite.
class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace dpaf
