#include "dpaf/nn/serialize.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

namespace dpaf::nn {
namespace {

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

class Reader {
 public:
  explicit Reader(std::string_view bytes) : bytes_(bytes) {}

  std::string_view take(std::size_t n) {
    if (bytes_.size() - pos_ < n) throw ConfigError("parameter container truncated");
    auto s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  std::uint64_t uint(int width) {
    auto s = take(static_cast<std::size_t>(width));
    std::uint64_t v = 0;
    for (int i = 0; i < width; ++i) v |= std::uint64_t(static_cast<unsigned char>(s[i])) << (8 * i);
    return v;
  }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  std::string_view bytes_;
  std::size_t pos_ = 0;
};

template <typename T>
using Bits = std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>;

}  // namespace

std::string_view dtype_name(DType d) {
  switch (d) {
    case DType::kFloat32: return "float32";
    case DType::kFloat64: return "float64";
    case DType::kText: return "text";
  }
  return "unknown";
}

template <typename T>
void Container::add_tensor(const std::string& name, const Tensor<T>& t) {
  ContainerEntry e{name, dtype_of<T>(), t.shape(), {}};
  e.payload.reserve(t.size() * sizeof(T));
  for (T v : t.values()) {
    const auto bits = std::bit_cast<Bits<T>>(v);
    for (std::size_t i = 0; i < sizeof(T); ++i) e.payload.push_back((bits >> (8 * i)) & 0xff);
  }
  entries_.push_back(std::move(e));
}

void Container::add_text(const std::string& name, std::string_view text) {
  entries_.push_back({name, DType::kText, {text.size()}, {text.begin(), text.end()}});
}

bool Container::contains(const std::string& name) const {
  for (const auto& e : entries_) {
    if (e.name == name) return true;
  }
  return false;
}

const ContainerEntry& Container::entry(const std::string& name) const {
  for (const auto& e : entries_) {
    if (e.name == name) return e;
  }
  throw LookupError("container has no entry '" + name + "'");
}

template <typename T>
Tensor<T> Container::tensor(const std::string& name) const {
  const auto& e = entry(name);
  if (e.dtype != dtype_of<T>()) {
    throw ConfigError("entry '" + name + "' has dtype " + std::string(dtype_name(e.dtype)) +
                      ", expected " + std::string(dtype_name(dtype_of<T>())));
  }
  Tensor<T> t(e.shape);
  for (std::size_t k = 0; k < t.size(); ++k) {
    Bits<T> bits = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) bits |= Bits<T>(e.payload[k * sizeof(T) + i]) << (8 * i);
    t[k] = std::bit_cast<T>(bits);
  }
  return t;
}

std::string Container::text(const std::string& name) const {
  const auto& e = entry(name);
  if (e.dtype != DType::kText) throw ConfigError("entry '" + name + "' is not text");
  return {e.payload.begin(), e.payload.end()};
}

std::string Container::encode() const {
  std::string out(kContainerMagic, sizeof(kContainerMagic));
  put_u32(out, kContainerVersion);
  put_u64(out, entries_.size());
  for (const auto& e : entries_) {
    put_u32(out, static_cast<std::uint32_t>(e.name.size()));
    out += e.name;
    out.push_back(static_cast<char>(e.dtype));
    put_u32(out, static_cast<std::uint32_t>(e.shape.size()));
    for (auto d : e.shape) put_u64(out, d);
    out.append(e.payload.begin(), e.payload.end());
  }
  return out;
}

Container Container::decode(std::string_view bytes) {
  Reader r(bytes);
  if (r.take(sizeof(kContainerMagic)) != std::string_view(kContainerMagic, sizeof(kContainerMagic))) {
    throw ConfigError("not a parameter container (bad magic)");
  }
  const auto version = r.uint(4);
  if (version != kContainerVersion) {
    throw ConfigError("unsupported container version " + std::to_string(version));
  }
  const auto count = r.uint(8);
  Container c;
  for (std::uint64_t i = 0; i < count; ++i) {
    ContainerEntry e;
    e.name = std::string(r.take(r.uint(4)));
    const auto tag = static_cast<std::uint8_t>(r.take(1)[0]);
    if (tag < 1 || tag > 3) throw ConfigError("entry '" + e.name + "' has unknown dtype tag");
    e.dtype = static_cast<DType>(tag);
    const auto rank = r.uint(4);
    for (std::uint64_t d = 0; d < rank; ++d) e.shape.push_back(r.uint(8));
    const std::size_t width = e.dtype == DType::kFloat32 ? 4 : e.dtype == DType::kFloat64 ? 8 : 1;
    auto payload = r.take(shape_size(e.shape) * width);
    e.payload.assign(payload.begin(), payload.end());
    c.entries_.push_back(std::move(e));
  }
  if (!r.done()) throw ConfigError("trailing bytes after parameter container");
  return c;
}

void Container::write(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError(path.string(), "cannot open for writing");
  const std::string bytes = encode();
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError(path.string(), "write failed");
}

Container Container::read(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(path.string(), "cannot open for reading");
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  try {
    return decode(bytes);
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

template <typename T>
void store_params(Container& c, const ParamStore<T>& params, const std::string& prefix) {
  for (std::size_t i = 0; i < params.entries(); ++i) {
    c.add_tensor(prefix + params.at(i).name, params.at(i).value);
  }
}

template <typename T>
void restore_params(const Container& c, ParamStore<T>& params, const std::string& prefix) {
  for (std::size_t i = 0; i < params.entries(); ++i) {
    auto& p = params.at(i);
    const std::string key = prefix + p.name;
    if (!c.contains(key)) throw ConfigError("checkpoint is missing parameter '" + key + "'");
    const auto& e = c.entry(key);
    if (e.dtype != dtype_of<T>()) {
      throw ConfigError("parameter '" + key + "' stored as " + std::string(dtype_name(e.dtype)) +
                        ", model uses " + std::string(dtype_name(dtype_of<T>())));
    }
    if (e.shape != p.value.shape()) {
      throw ConfigError("parameter '" + key + "' has shape " + shape_string(e.shape) +
                        ", model expects " + shape_string(p.value.shape()));
    }
    p.value = c.tensor<T>(key);
  }
}

template void Container::add_tensor(const std::string&, const Tensor<float>&);
template void Container::add_tensor(const std::string&, const Tensor<double>&);
template Tensor<float> Container::tensor(const std::string&) const;
template Tensor<double> Container::tensor(const std::string&) const;
template void store_params(Container&, const ParamStore<float>&, const std::string&);
template void store_params(Container&, const ParamStore<double>&, const std::string&);
template void restore_params(const Container&, ParamStore<float>&, const std::string&);
template void restore_params(const Container&, ParamStore<double>&, const std::string&);

}  // namespace dpaf::nn
