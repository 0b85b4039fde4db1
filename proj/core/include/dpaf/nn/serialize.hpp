#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "dpaf/nn/params.hpp"

// Flat binary parameter container.
//
//   magic    8 bytes  "DPAFPARM"
//   version  u32
//   count    u64
//   count x entry:
//     name_len u32, name bytes (UTF-8)
//     dtype    u8   (1 = float32, 2 = float64, 3 = UTF-8 text)
//     rank     u32, rank x u64 dims
//     payload  product(dims) values, little-endian
//
// All integers are little-endian. Text entries have rank 1 and one byte per element.
namespace dpaf::nn {

inline constexpr char kContainerMagic[8] = {'D', 'P', 'A', 'F', 'P', 'A', 'R', 'M'};
inline constexpr std::uint32_t kContainerVersion = 1;

enum class DType : std::uint8_t { kFloat32 = 1, kFloat64 = 2, kText = 3 };

std::string_view dtype_name(DType d);

template <typename T>
constexpr DType dtype_of();
template <>
constexpr DType dtype_of<float>() { return DType::kFloat32; }
template <>
constexpr DType dtype_of<double>() { return DType::kFloat64; }

struct ContainerEntry {
  std::string name;
  DType dtype = DType::kFloat32;
  Shape shape;
  std::vector<std::uint8_t> payload;  // already little-endian
};

class Container {
 public:
  template <typename T>
  void add_tensor(const std::string& name, const Tensor<T>& t);
  void add_text(const std::string& name, std::string_view text);

  bool contains(const std::string& name) const;
  const ContainerEntry& entry(const std::string& name) const;
  const std::vector<ContainerEntry>& entries() const noexcept { return entries_; }

  /// Decodes a tensor entry; the stored dtype must equal T.
  template <typename T>
  Tensor<T> tensor(const std::string& name) const;
  std::string text(const std::string& name) const;

  std::string encode() const;
  static Container decode(std::string_view bytes);

  void write(const std::filesystem::path& path) const;
  static Container read(const std::filesystem::path& path);

 private:
  std::vector<ContainerEntry> entries_;
};

/// Adds every parameter value as `prefix + name`.
template <typename T>
void store_params(Container& c, const ParamStore<T>& params, const std::string& prefix = "");

/// Copies `prefix + name` entries into an existing store. Throws ConfigError
/// naming the first missing, mistyped or misshaped entry.
template <typename T>
void restore_params(const Container& c, ParamStore<T>& params, const std::string& prefix = "");

}  // namespace dpaf::nn
