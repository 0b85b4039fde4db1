#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "dpaf/tensor.hpp"

// Synthetic rain. Images are 3 x H x W float tensors in [0, 1]; streak
// layers and region masks are H x W.
namespace dpaf::rain {

using Image = Tensor<float>;

struct StreakSpec {
  double direction_deg = 90.0;  // 90 = vertical
  double density = 0.02;        // probability of a seed pixel
  int length_px = 9;
  double intensity = 0.8;       // peak value of the rendered layer
  std::uint64_t seed = 0;
};

struct StreakLayer {
  Tensor<float> pixels;
  StreakSpec spec;
};

struct RainParams {
  double transmittance = 1.0;
  std::vector<StreakLayer> layers;
  Tensor<float> region_mask;  // H x W, entries 0 or 1
  std::array<double, 3> atmospheric_light{1.0, 1.0, 1.0};
};

struct RainyPair {
  Image rainy;
  Image clean;
  RainParams params;
  std::uint64_t seed = 0;
};

void validate(const StreakSpec& spec);
void validate(const RainParams& params);

/// Binary salt noise: each pixel is 1 with probability `density`.
Tensor<float> streak_noise(std::size_t height, std::size_t width, double density,
                           std::uint64_t seed);

/// Normalized line kernel (odd size >= length) rasterized through the
/// center at `direction_deg`, measured counter-clockwise from the x axis.
Tensor<float> line_kernel(int length_px, double direction_deg);

/// Salt noise, correlated with the line kernel (zero padding), scaled so
/// the brightest pixel equals `intensity`.
StreakLayer render_streak_layer(std::size_t height, std::size_t width, const StreakSpec& spec);

/// O = clamp(B + S, 0, 1), the streak layer broadcast over channels.
Image compose_additive(const Image& clean, const StreakLayer& streaks);

/// O = clamp(t * (B + sum_k S_k * R) + (1 - t) * A, 0, 1).
Image compose_heavy(const Image& clean, const RainParams& params);

Image flip_horizontal(const Image& image);
Image crop(const Image& image, std::size_t top, std::size_t left, std::size_t height,
           std::size_t width);

struct TrainingPatch {
  Image rainy;
  Image clean;
  std::size_t top = 0;
  std::size_t left = 0;
  bool flipped = false;
};

/// Same crop window and same flip decision for both images; a pure function
/// of `seed`. With `hflip` false no flip is ever applied.
TrainingPatch sample_training_patch(const Image& rainy, const Image& clean, std::size_t patch,
                                    std::uint64_t seed, bool hflip);

}  // namespace dpaf::rain
