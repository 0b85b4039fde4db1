#pragma once

#include <cstdint>
#include <filesystem>

#include "dpaf/tensor.hpp"

namespace dpaf {

/// Reads an 8-bit PNG as a 3 x H x W tensor with v = q / 255.
/// Gray and alpha inputs are converted to RGB.
Tensor<float> read_png(const std::filesystem::path& path);

/// Writes a 3 x H x W tensor as 8-bit RGB with q = round(255 * clamp(v, 0, 1)).
void write_png(const std::filesystem::path& path, const Tensor<float>& image);

std::uint8_t quantize_unit(float v);

/// The value an image takes after a PNG write/read round trip.
Tensor<float> quantize_image(const Tensor<float>& image);

}  // namespace dpaf
