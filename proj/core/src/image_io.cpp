#include "dpaf/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <vector>

namespace dpaf {

std::uint8_t quantize_unit(float v) {
  const float c = std::clamp(v, 0.0f, 1.0f);
  return static_cast<std::uint8_t>(std::lround(255.0f * c));
}

Tensor<float> quantize_image(const Tensor<float>& image) {
  Tensor<float> out(image.shape());
  for (std::size_t i = 0; i < image.size(); ++i) out[i] = quantize_unit(image[i]) / 255.0f;
  return out;
}

Tensor<float> read_png(const std::filesystem::path& path) {
  png_image img{};
  img.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&img, path.c_str())) {
    throw IoError(path.string(), std::string("cannot read PNG: ") + img.message);
  }
  img.format = PNG_FORMAT_RGB;
  std::vector<png_byte> buffer(PNG_IMAGE_SIZE(img));
  if (!png_image_finish_read(&img, nullptr, buffer.data(), 0, nullptr)) {
    png_image_free(&img);
    throw IoError(path.string(), std::string("cannot decode PNG: ") + img.message);
  }
  const std::size_t h = img.height, w = img.width;
  Tensor<float> out({3, h, w});
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      for (std::size_t c = 0; c < 3; ++c) {
        out[(c * h + y) * w + x] = buffer[(y * w + x) * 3 + c] / 255.0f;
      }
    }
  }
  return out;
}

void write_png(const std::filesystem::path& path, const Tensor<float>& image) {
  if (image.rank() != 3 || image.dim(0) != 3) {
    throw ShapeError("write_png: expected 3 x H x W, got " + shape_string(image.shape()));
  }
  const std::size_t h = image.dim(1), w = image.dim(2);
  std::vector<png_byte> buffer(h * w * 3);
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      for (std::size_t c = 0; c < 3; ++c) {
        buffer[(y * w + x) * 3 + c] = quantize_unit(image[(c * h + y) * w + x]);
      }
    }
  }
  png_image img{};
  img.version = PNG_IMAGE_VERSION;
  img.width = static_cast<png_uint_32>(w);
  img.height = static_cast<png_uint_32>(h);
  img.format = PNG_FORMAT_RGB;
  if (!png_image_write_to_file(&img, path.c_str(), 0, buffer.data(), 0, nullptr)) {
    throw IoError(path.string(), std::string("cannot write PNG: ") + img.message);
  }
}

}  // namespace dpaf
