#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dpaf/rain/rain_model.hpp"

// Paired dataset generation and the JSON manifest that makes it reproducible.
//
// Manifest schema (manifest.json):
//   {
//     "format": "dpaf-manifest", "version": 1,
//     "generator": { "n_pairs", "height", "width", "seed", "composition", "ranges": {...} }
//                  -- absent for imported datasets
//     "pairs": [ {
//        "id", "rainy", "clean"            -- paths relative to the manifest
//        "seed", "scene_seed",             -- absent for imported pairs
//        "rain": { "transmittance", "atmospheric_light": [r,g,b],
//                  "rain_free_rect": [top, left, height, width],
//                  "layers": [ { "direction_deg", "density", "length_px",
//                                "intensity", "seed" } ] } } ]
//   }
namespace dpaf::rain {

struct Range {
  double lo = 0.0;
  double hi = 0.0;
};

struct IntRange {
  int lo = 0;
  int hi = 0;
};

struct RainRanges {
  IntRange layers{1, 3};
  Range direction_deg{60.0, 120.0};
  Range density{0.01, 0.05};
  IntRange length_px{5, 21};
  Range intensity{0.5, 1.0};
  Range transmittance{0.8, 1.0};
  Range atmospheric_light{0.7, 1.0};
  Range rain_free_fraction{0.0, 0.3};
};

enum class Composition { kAdditive, kHeavy };

std::string to_string(Composition c);
Composition composition_from_string(const std::string& s);

struct DatasetSpec {
  std::size_t n_pairs = 1;
  std::size_t height = 64;
  std::size_t width = 64;
  RainRanges ranges;
  Composition composition = Composition::kHeavy;
  std::uint64_t seed = 0;
};

/// Everything needed to re-render one pair's rain.
struct RainRecord {
  double transmittance = 1.0;
  std::array<double, 3> atmospheric_light{1.0, 1.0, 1.0};
  std::array<std::size_t, 4> rain_free_rect{0, 0, 0, 0};  // top, left, height, width
  std::vector<StreakSpec> layers;
};

struct PairRecord {
  std::string id;
  std::string rainy_path;  // relative to the manifest directory
  std::string clean_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::uint64_t> scene_seed;
  std::optional<RainRecord> rain;
};

struct Manifest {
  std::optional<DatasetSpec> generator;
  std::vector<PairRecord> pairs;
  std::filesystem::path directory;  // where relative paths resolve; not serialized
};

struct Sample {
  std::string id;
  Image rainy;
  Image clean;
};

/// Procedural clean background: smooth color gradient, low-frequency
/// texture and a handful of flat shapes. Pure function of the seed.
Image render_scene(std::size_t height, std::size_t width, std::uint64_t seed);

/// Draws the parameters of pair `index`; depends only on (spec, index).
PairRecord sample_pair_record(const DatasetSpec& spec, std::size_t index);

/// Builds the full RainParams (rendered layers and mask) for a record.
RainParams realize(const RainRecord& record, std::size_t height, std::size_t width);

RainyPair synthesize_pair(const PairRecord& record, std::size_t height, std::size_t width,
                          Composition composition);

/// Writes rainy/ and clean/ PNGs plus manifest.json into `out_dir`.
Manifest generate_dataset(const DatasetSpec& spec, const std::filesystem::path& out_dir);

nlohmann::json to_json(const Manifest& manifest);
Manifest manifest_from_json(const nlohmann::json& j, const std::filesystem::path& directory);

void write_manifest(const Manifest& manifest, const std::filesystem::path& path);
Manifest read_manifest(const std::filesystem::path& path);

/// Loads every pair's images (dequantized PNG values).
std::vector<Sample> load_samples(const Manifest& manifest);

/// Builds a manifest for user-supplied pairs: files with equal names in the
/// two folders are paired. The manifest is written to `manifest_path`.
Manifest import_pairs(const std::filesystem::path& rainy_dir, const std::filesystem::path& clean_dir,
                      const std::filesystem::path& manifest_path);

nlohmann::json to_json(const RainRanges& r);
RainRanges ranges_from_json(const nlohmann::json& j);

}  // namespace dpaf::rain
