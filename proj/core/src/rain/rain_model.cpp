#include "dpaf/rain/rain_model.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "dpaf/rng.hpp"

namespace dpaf::rain {
namespace {

void require_image(const Image& image, const char* what) {
  if (image.rank() != 3 || image.dim(0) != 3 || image.dim(1) == 0 || image.dim(2) == 0) {
    throw ShapeError(std::string(what) + ": expected a 3 x H x W image, got " +
                     shape_string(image.shape()));
  }
}

void require_plane(const Tensor<float>& plane, const Image& image, const char* what) {
  if (plane.shape() != Shape{image.dim(1), image.dim(2)}) {
    throw ShapeError(std::string(what) + ": plane " + shape_string(plane.shape()) +
                     " does not match image " + shape_string(image.shape()));
  }
}

}  // namespace

void validate(const StreakSpec& spec) {
  if (!(spec.density >= 0.0 && spec.density <= 1.0)) {
    throw ParameterError("streak density must lie in [0, 1]");
  }
  if (spec.length_px < 1) throw ParameterError("streak length must be >= 1 pixel");
  if (!(spec.intensity > 0.0 && spec.intensity <= 1.0)) {
    throw ParameterError("streak intensity must lie in (0, 1]");
  }
}

void validate(const RainParams& params) {
  if (!(params.transmittance >= 0.0 && params.transmittance <= 1.0)) {
    throw ParameterError("transmittance must lie in [0, 1]");
  }
  if (params.layers.empty()) throw ParameterError("rain parameters need at least one streak layer");
  for (double a : params.atmospheric_light) {
    if (!(a >= 0.0 && a <= 1.0)) throw ParameterError("atmospheric light must lie in [0, 1]");
  }
  for (float v : params.region_mask.values()) {
    if (v != 0.0f && v != 1.0f) throw ParameterError("region mask entries must be 0 or 1");
  }
}

Tensor<float> streak_noise(std::size_t height, std::size_t width, double density,
                           std::uint64_t seed) {
  Rng rng(seed);
  Tensor<float> noise({height, width});
  for (auto& v : noise.values()) v = rng.bernoulli(density) ? 1.0f : 0.0f;
  return noise;
}

Tensor<float> line_kernel(int length_px, double direction_deg) {
  if (length_px < 1) throw ParameterError("streak length must be >= 1 pixel");
  const std::size_t size = static_cast<std::size_t>(length_px | 1);
  const double center = (static_cast<double>(size) - 1.0) / 2.0;
  const double theta = direction_deg * std::numbers::pi / 180.0;
  Tensor<float> kernel({size, size});
  for (int i = 0; i < length_px; ++i) {
    const double t = i - (length_px - 1) / 2.0;
    const auto x = static_cast<std::size_t>(std::floor(center + t * std::cos(theta) + 0.5));
    const auto y = static_cast<std::size_t>(std::floor(center - t * std::sin(theta) + 0.5));
    kernel[y * size + x] = 1.0f;
  }
  const float total = sum(kernel);
  for (auto& v : kernel.values()) v /= total;
  return kernel;
}

StreakLayer render_streak_layer(std::size_t height, std::size_t width, const StreakSpec& spec) {
  validate(spec);
  if (height == 0 || width == 0) throw ParameterError("streak layer needs a nonempty shape");
  const Tensor<float> noise = streak_noise(height, width, spec.density, spec.seed);
  const Tensor<float> kernel = line_kernel(spec.length_px, spec.direction_deg);
  const auto k = static_cast<std::ptrdiff_t>(kernel.dim(0));
  const std::ptrdiff_t r = k / 2;
  const auto h = static_cast<std::ptrdiff_t>(height), w = static_cast<std::ptrdiff_t>(width);

  std::vector<double> blurred(height * width, 0.0);
  double peak = 0.0;
  for (std::ptrdiff_t y = 0; y < h; ++y) {
    for (std::ptrdiff_t x = 0; x < w; ++x) {
      double acc = 0.0;
      for (std::ptrdiff_t ky = 0; ky < k; ++ky) {
        const std::ptrdiff_t iy = y + ky - r;
        if (iy < 0 || iy >= h) continue;
        for (std::ptrdiff_t kx = 0; kx < k; ++kx) {
          const std::ptrdiff_t ix = x + kx - r;
          if (ix < 0 || ix >= w) continue;
          acc += static_cast<double>(kernel[ky * k + kx]) * noise[iy * w + ix];
        }
      }
      blurred[y * w + x] = acc;
      peak = std::max(peak, acc);
    }
  }
  StreakLayer layer{Tensor<float>({height, width}), spec};
  if (peak > 0.0) {
    for (std::size_t i = 0; i < blurred.size(); ++i) {
      layer.pixels[i] = static_cast<float>(spec.intensity * (blurred[i] / peak));
    }
  }
  return layer;
}

Image compose_additive(const Image& clean, const StreakLayer& streaks) {
  require_image(clean, "compose_additive");
  require_plane(streaks.pixels, clean, "compose_additive");
  const std::size_t hw = clean.dim(1) * clean.dim(2);
  Image out(clean.shape());
  for (std::size_t c = 0; c < 3; ++c) {
    for (std::size_t p = 0; p < hw; ++p) {
      out[c * hw + p] = std::clamp(clean[c * hw + p] + streaks.pixels[p], 0.0f, 1.0f);
    }
  }
  return out;
}

Image compose_heavy(const Image& clean, const RainParams& params) {
  require_image(clean, "compose_heavy");
  validate(params);
  require_plane(params.region_mask, clean, "compose_heavy");
  for (const auto& layer : params.layers) require_plane(layer.pixels, clean, "compose_heavy");

  const std::size_t hw = clean.dim(1) * clean.dim(2);
  std::vector<float> rain(hw, 0.0f);
  for (const auto& layer : params.layers) {
    for (std::size_t p = 0; p < hw; ++p) rain[p] += layer.pixels[p] * params.region_mask[p];
  }
  const auto t = static_cast<float>(params.transmittance);
  Image out(clean.shape());
  for (std::size_t c = 0; c < 3; ++c) {
    const auto ambient = (1.0f - t) * static_cast<float>(params.atmospheric_light[c]);
    for (std::size_t p = 0; p < hw; ++p) {
      out[c * hw + p] = std::clamp(t * (clean[c * hw + p] + rain[p]) + ambient, 0.0f, 1.0f);
    }
  }
  return out;
}

Image flip_horizontal(const Image& image) {
  require_image(image, "flip_horizontal");
  const std::size_t h = image.dim(1), w = image.dim(2);
  Image out(image.shape());
  for (std::size_t c = 0; c < 3; ++c) {
    for (std::size_t y = 0; y < h; ++y) {
      for (std::size_t x = 0; x < w; ++x) {
        out[(c * h + y) * w + x] = image[(c * h + y) * w + (w - 1 - x)];
      }
    }
  }
  return out;
}

Image crop(const Image& image, std::size_t top, std::size_t left, std::size_t height,
           std::size_t width) {
  require_image(image, "crop");
  if (top + height > image.dim(1) || left + width > image.dim(2)) {
    throw ParameterError("crop window exceeds image " + shape_string(image.shape()));
  }
  const std::size_t h = image.dim(1), w = image.dim(2);
  Image out({3, height, width});
  for (std::size_t c = 0; c < 3; ++c) {
    for (std::size_t y = 0; y < height; ++y) {
      std::copy_n(image.data() + (c * h + top + y) * w + left, width,
                  out.data() + (c * height + y) * width);
    }
  }
  return out;
}

TrainingPatch sample_training_patch(const Image& rainy, const Image& clean, std::size_t patch,
                                    std::uint64_t seed, bool hflip) {
  require_image(rainy, "sample_training_patch");
  require_same_shape(rainy, clean, "sample_training_patch");
  if (patch == 0 || patch > std::min(rainy.dim(1), rainy.dim(2))) {
    throw ParameterError("patch size " + std::to_string(patch) + " exceeds image " +
                         shape_string(rainy.shape()));
  }
  Rng rng(seed);
  TrainingPatch out;
  out.top = rng.index(rainy.dim(1) - patch + 1);
  out.left = rng.index(rainy.dim(2) - patch + 1);
  out.flipped = hflip && rng.bernoulli(0.5);
  out.rainy = crop(rainy, out.top, out.left, patch, patch);
  out.clean = crop(clean, out.top, out.left, patch, patch);
  if (out.flipped) {
    out.rainy = flip_horizontal(out.rainy);
    out.clean = flip_horizontal(out.clean);
  }
  return out;
}

}  // namespace dpaf::rain
