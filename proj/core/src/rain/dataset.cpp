#include "dpaf/rain/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <set>

#include "dpaf/image_io.hpp"
#include "dpaf/json_util.hpp"
#include "dpaf/rng.hpp"

namespace dpaf::rain {

namespace fs = std::filesystem;
using nlohmann::json;

std::string to_string(Composition c) { return c == Composition::kAdditive ? "additive" : "heavy"; }

Composition composition_from_string(const std::string& s) {
  if (s == "additive") return Composition::kAdditive;
  if (s == "heavy") return Composition::kHeavy;
  throw ConfigError("unknown composition '" + s + "' (expected additive or heavy)");
}

Image render_scene(std::size_t height, std::size_t width, std::uint64_t seed) {
  Rng rng(seed);
  std::array<double, 3> c0{}, c1{};
  for (auto& v : c0) v = rng.uniform(0.05, 0.95);
  for (auto& v : c1) v = rng.uniform(0.05, 0.95);
  const double angle = rng.uniform(0.0, 2.0 * std::numbers::pi);
  const double gx = std::cos(angle), gy = std::sin(angle);

  struct Wave {
    double fx, fy, phase, amp;
    std::array<double, 3> tint;
  };
  std::vector<Wave> waves(3);
  for (auto& wv : waves) {
    wv.fx = rng.uniform(-4.0, 4.0) * 2.0 * std::numbers::pi / static_cast<double>(width);
    wv.fy = rng.uniform(-4.0, 4.0) * 2.0 * std::numbers::pi / static_cast<double>(height);
    wv.phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
    wv.amp = rng.uniform(0.02, 0.12);
    for (auto& t : wv.tint) t = rng.uniform(0.5, 1.0);
  }

  struct Shape2d {
    bool circle;
    double cy, cx, ry, rx;
    std::array<double, 3> color;
  };
  std::vector<Shape2d> shapes(static_cast<std::size_t>(rng.integer(3, 8)));
  for (auto& s : shapes) {
    s.circle = rng.bernoulli(0.5);
    s.cy = rng.uniform(0.0, static_cast<double>(height));
    s.cx = rng.uniform(0.0, static_cast<double>(width));
    s.ry = rng.uniform(0.05, 0.3) * static_cast<double>(height);
    s.rx = rng.uniform(0.05, 0.3) * static_cast<double>(width);
    for (auto& v : s.color) v = rng.uniform(0.0, 1.0);
  }

  Image img({3, height, width});
  const double diag = static_cast<double>(height + width);
  for (std::size_t y = 0; y < height; ++y) {
    for (std::size_t x = 0; x < width; ++x) {
      const double t = 0.5 + (gx * (x - width / 2.0) + gy * (y - height / 2.0)) / diag;
      std::array<double, 3> px{};
      for (std::size_t c = 0; c < 3; ++c) px[c] = c0[c] + (c1[c] - c0[c]) * t;
      for (const auto& s : shapes) {
        const double dy = (y + 0.5 - s.cy) / s.ry, dx = (x + 0.5 - s.cx) / s.rx;
        const bool inside = s.circle ? dx * dx + dy * dy <= 1.0 : std::abs(dx) <= 1.0 && std::abs(dy) <= 1.0;
        if (inside) px = s.color;
      }
      for (const auto& wv : waves) {
        const double v = wv.amp * std::sin(wv.fx * x + wv.fy * y + wv.phase);
        for (std::size_t c = 0; c < 3; ++c) px[c] += v * wv.tint[c];
      }
      for (std::size_t c = 0; c < 3; ++c) {
        img[(c * height + y) * width + x] = static_cast<float>(std::clamp(px[c], 0.0, 1.0));
      }
    }
  }
  return img;
}

PairRecord sample_pair_record(const DatasetSpec& spec, std::size_t index) {
  PairRecord rec;
  char id[32];
  std::snprintf(id, sizeof id, "pair_%05zu", index);
  rec.id = id;
  rec.rainy_path = "rainy/" + rec.id + ".png";
  rec.clean_path = "clean/" + rec.id + ".png";
  rec.seed = derive_seed(spec.seed, index);

  const RainRanges& r = spec.ranges;
  Rng rng(*rec.seed);
  rec.scene_seed = rng.next();
  RainRecord rain;
  const int layer_count =
      spec.composition == Composition::kAdditive ? 1 : static_cast<int>(rng.integer(r.layers.lo, r.layers.hi));
  for (int i = 0; i < layer_count; ++i) {
    StreakSpec s;
    s.direction_deg = rng.uniform(r.direction_deg.lo, r.direction_deg.hi);
    s.density = rng.uniform(r.density.lo, r.density.hi);
    s.length_px = static_cast<int>(rng.integer(r.length_px.lo, r.length_px.hi));
    s.intensity = rng.uniform(r.intensity.lo, r.intensity.hi);
    s.seed = rng.next();
    rain.layers.push_back(s);
  }
  if (spec.composition == Composition::kHeavy) {
    rain.transmittance = rng.uniform(r.transmittance.lo, r.transmittance.hi);
    for (auto& a : rain.atmospheric_light) a = rng.uniform(r.atmospheric_light.lo, r.atmospheric_light.hi);
    const double fraction = rng.uniform(r.rain_free_fraction.lo, r.rain_free_fraction.hi);
    const auto rh = static_cast<std::size_t>(std::lround(spec.height * std::sqrt(fraction)));
    const auto rw = static_cast<std::size_t>(std::lround(spec.width * std::sqrt(fraction)));
    const std::size_t top = rng.index(spec.height - rh + 1);
    const std::size_t left = rng.index(spec.width - rw + 1);
    rain.rain_free_rect = {top, left, rh, rw};
  }
  rec.rain = rain;
  return rec;
}

RainParams realize(const RainRecord& record, std::size_t height, std::size_t width) {
  RainParams p;
  p.transmittance = record.transmittance;
  p.atmospheric_light = record.atmospheric_light;
  p.region_mask = Tensor<float>({height, width}, 1.0f);
  const auto [top, left, rh, rw] = record.rain_free_rect;
  for (std::size_t y = top; y < std::min(top + rh, height); ++y) {
    for (std::size_t x = left; x < std::min(left + rw, width); ++x) p.region_mask[y * width + x] = 0.0f;
  }
  for (const auto& s : record.layers) p.layers.push_back(render_streak_layer(height, width, s));
  return p;
}

RainyPair synthesize_pair(const PairRecord& record, std::size_t height, std::size_t width,
                          Composition composition) {
  if (!record.rain || !record.scene_seed) {
    throw ParameterError("pair '" + record.id + "' carries no generation parameters");
  }
  RainyPair pair;
  pair.seed = record.seed.value_or(0);
  pair.clean = render_scene(height, width, *record.scene_seed);
  pair.params = realize(*record.rain, height, width);
  pair.rainy = composition == Composition::kAdditive ? compose_additive(pair.clean, pair.params.layers.front())
                                                     : compose_heavy(pair.clean, pair.params);
  return pair;
}

Manifest generate_dataset(const DatasetSpec& spec, const fs::path& out_dir) {
  if (spec.n_pairs == 0) throw ParameterError("dataset must contain at least one pair");
  if (spec.height == 0 || spec.width == 0) throw ParameterError("image size must be positive");
  std::error_code ec;
  fs::create_directories(out_dir / "rainy", ec);
  if (!ec) fs::create_directories(out_dir / "clean", ec);
  if (ec) throw IoError(out_dir.string(), "cannot create dataset directories: " + ec.message());

  Manifest m;
  m.generator = spec;
  m.directory = out_dir;
  for (std::size_t i = 0; i < spec.n_pairs; ++i) {
    PairRecord rec = sample_pair_record(spec, i);
    const RainyPair pair = synthesize_pair(rec, spec.height, spec.width, spec.composition);
    write_png(out_dir / rec.rainy_path, pair.rainy);
    write_png(out_dir / rec.clean_path, pair.clean);
    m.pairs.push_back(std::move(rec));
  }
  write_manifest(m, out_dir / "manifest.json");
  return m;
}

json to_json(const RainRanges& r) {
  auto range = [](const Range& v) { return json::array({v.lo, v.hi}); };
  auto irange = [](const IntRange& v) { return json::array({v.lo, v.hi}); };
  return {{"layers", irange(r.layers)},
          {"direction_deg", range(r.direction_deg)},
          {"density", range(r.density)},
          {"length_px", irange(r.length_px)},
          {"intensity", range(r.intensity)},
          {"transmittance", range(r.transmittance)},
          {"atmospheric_light", range(r.atmospheric_light)},
          {"rain_free_fraction", range(r.rain_free_fraction)}};
}

RainRanges ranges_from_json(const json& j) {
  require_known_keys(j,
                     {"layers", "direction_deg", "density", "length_px", "intensity", "transmittance",
                      "atmospheric_light", "rain_free_fraction"},
                     "rain ranges");
  RainRanges r;
  auto range = [&](const char* key, Range& out) {
    std::array<double, 2> v{out.lo, out.hi};
    read_optional(j, key, v, "rain ranges");
    if (v[0] > v[1]) throw ConfigError(std::string("rain ranges.") + key + ": lower bound exceeds upper");
    out = {v[0], v[1]};
  };
  auto irange = [&](const char* key, IntRange& out) {
    std::array<int, 2> v{out.lo, out.hi};
    read_optional(j, key, v, "rain ranges");
    if (v[0] > v[1]) throw ConfigError(std::string("rain ranges.") + key + ": lower bound exceeds upper");
    out = {v[0], v[1]};
  };
  irange("layers", r.layers);
  range("direction_deg", r.direction_deg);
  range("density", r.density);
  irange("length_px", r.length_px);
  range("intensity", r.intensity);
  range("transmittance", r.transmittance);
  range("atmospheric_light", r.atmospheric_light);
  range("rain_free_fraction", r.rain_free_fraction);
  if (r.layers.lo < 1) throw ConfigError("rain ranges.layers: need at least one layer");
  if (r.length_px.lo < 1) throw ConfigError("rain ranges.length_px: must be >= 1");
  if (r.density.lo < 0 || r.density.hi > 1) throw ConfigError("rain ranges.density: must lie in [0, 1]");
  if (r.intensity.lo <= 0 || r.intensity.hi > 1) throw ConfigError("rain ranges.intensity: must lie in (0, 1]");
  if (r.transmittance.lo < 0 || r.transmittance.hi > 1) {
    throw ConfigError("rain ranges.transmittance: must lie in [0, 1]");
  }
  if (r.atmospheric_light.lo < 0 || r.atmospheric_light.hi > 1) {
    throw ConfigError("rain ranges.atmospheric_light: must lie in [0, 1]");
  }
  if (r.rain_free_fraction.lo < 0 || r.rain_free_fraction.hi > 1) {
    throw ConfigError("rain ranges.rain_free_fraction: must lie in [0, 1]");
  }
  return r;
}

json to_json(const Manifest& manifest) {
  json j;
  j["format"] = "dpaf-manifest";
  j["version"] = 1;
  if (manifest.generator) {
    const auto& g = *manifest.generator;
    j["generator"] = {{"n_pairs", g.n_pairs},
                      {"height", g.height},
                      {"width", g.width},
                      {"seed", g.seed},
                      {"composition", to_string(g.composition)},
                      {"ranges", to_json(g.ranges)}};
  }
  json pairs = json::array();
  for (const auto& p : manifest.pairs) {
    json e = {{"id", p.id}, {"rainy", p.rainy_path}, {"clean", p.clean_path}};
    if (p.seed) e["seed"] = *p.seed;
    if (p.scene_seed) e["scene_seed"] = *p.scene_seed;
    if (p.rain) {
      json layers = json::array();
      for (const auto& s : p.rain->layers) {
        layers.push_back({{"direction_deg", s.direction_deg},
                          {"density", s.density},
                          {"length_px", s.length_px},
                          {"intensity", s.intensity},
                          {"seed", s.seed}});
      }
      e["rain"] = {{"transmittance", p.rain->transmittance},
                   {"atmospheric_light", p.rain->atmospheric_light},
                   {"rain_free_rect", p.rain->rain_free_rect},
                   {"layers", layers}};
    }
    pairs.push_back(std::move(e));
  }
  j["pairs"] = std::move(pairs);
  return j;
}

Manifest manifest_from_json(const json& j, const fs::path& directory) {
  try {
    if (j.at("format") != "dpaf-manifest") throw ConfigError("not a dpaf manifest");
    if (j.at("version") != 1) throw ConfigError("unsupported manifest version");
    Manifest m;
    m.directory = directory;
    if (j.contains("generator")) {
      const auto& g = j["generator"];
      DatasetSpec spec;
      spec.n_pairs = g.at("n_pairs");
      spec.height = g.at("height");
      spec.width = g.at("width");
      spec.seed = g.at("seed");
      spec.composition = composition_from_string(g.at("composition"));
      spec.ranges = ranges_from_json(g.at("ranges"));
      m.generator = spec;
    }
    for (const auto& e : j.at("pairs")) {
      PairRecord p;
      p.id = e.at("id");
      p.rainy_path = e.at("rainy");
      p.clean_path = e.at("clean");
      if (e.contains("seed")) p.seed = e["seed"].get<std::uint64_t>();
      if (e.contains("scene_seed")) p.scene_seed = e["scene_seed"].get<std::uint64_t>();
      if (e.contains("rain")) {
        const auto& r = e["rain"];
        RainRecord rain;
        rain.transmittance = r.at("transmittance");
        rain.atmospheric_light = r.at("atmospheric_light");
        rain.rain_free_rect = r.at("rain_free_rect");
        for (const auto& l : r.at("layers")) {
          rain.layers.push_back({l.at("direction_deg"), l.at("density"), l.at("length_px"),
                                 l.at("intensity"), l.at("seed")});
        }
        p.rain = rain;
      }
      m.pairs.push_back(std::move(p));
    }
    return m;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed manifest: ") + e.what());
  }
}

void write_manifest(const Manifest& manifest, const fs::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError(path.string(), "cannot open manifest for writing");
  out << to_json(manifest).dump(2) << '\n';
  if (!out) throw IoError(path.string(), "manifest write failed");
}

Manifest read_manifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError(path.string(), "cannot open manifest");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw IoError(path.string(), std::string("invalid JSON: ") + e.what());
  }
  return manifest_from_json(j, path.parent_path());
}

std::vector<Sample> load_samples(const Manifest& manifest) {
  std::vector<Sample> samples;
  samples.reserve(manifest.pairs.size());
  for (const auto& p : manifest.pairs) {
    Sample s{p.id, read_png(manifest.directory / p.rainy_path), read_png(manifest.directory / p.clean_path)};
    if (s.rainy.shape() != s.clean.shape()) {
      throw ShapeError("pair '" + p.id + "': rainy and clean images differ in size");
    }
    samples.push_back(std::move(s));
  }
  return samples;
}

Manifest import_pairs(const fs::path& rainy_dir, const fs::path& clean_dir, const fs::path& manifest_path) {
  std::set<std::string> names;
  std::error_code ec;
  for (const auto& entry : fs::directory_iterator(rainy_dir, ec)) {
    if (entry.is_regular_file() && entry.path().extension() == ".png") names.insert(entry.path().filename().string());
  }
  if (ec) throw IoError(rainy_dir.string(), "cannot list directory: " + ec.message());
  Manifest m;
  m.directory = manifest_path.parent_path();
  const fs::path base = fs::absolute(m.directory.empty() ? fs::path(".") : m.directory);
  for (const auto& name : names) {
    if (!fs::exists(clean_dir / name)) continue;
    PairRecord p;
    p.id = fs::path(name).stem().string();
    p.rainy_path = fs::relative(fs::absolute(rainy_dir / name), base).generic_string();
    p.clean_path = fs::relative(fs::absolute(clean_dir / name), base).generic_string();
    m.pairs.push_back(std::move(p));
  }
  if (m.pairs.empty()) throw IoError(rainy_dir.string(), "no pairs with matching names in " + clean_dir.string());
  write_manifest(m, manifest_path);
  return m;
}

}  // namespace dpaf::rain
