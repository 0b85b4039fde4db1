#pragma once

#include <initializer_list>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "dpaf/errors.hpp"

namespace dpaf {

/// Rejects objects carrying keys outside `allowed`.
inline void require_known_keys(const nlohmann::json& j, std::initializer_list<std::string_view> allowed,
                               const std::string& context) {
  if (!j.is_object()) throw ConfigError(context + ": expected an object");
  for (const auto& [key, value] : j.items()) {
    bool known = false;
    for (auto a : allowed) known = known || key == a;
    if (!known) throw ConfigError(context + ": unknown key '" + key + "'");
  }
}

/// Reads `key` into `out` when present, with a typed diagnostic on mismatch.
template <typename V>
void read_optional(const nlohmann::json& j, const char* key, V& out, const std::string& context) {
  auto it = j.find(key);
  if (it == j.end()) return;
  try {
    out = it->template get<V>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(context + "." + key + ": " + e.what());
  }
}

}  // namespace dpaf
