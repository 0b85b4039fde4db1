#include "dpaf/net/checkpoint.hpp"

#include "dpaf/errors.hpp"

namespace dpaf::net {

template <typename T>
nn::Container model_to_container(const Model<T>& model) {
  nn::Container c;
  c.add_text("meta/format", kCheckpointFormat);
  c.add_text("meta/version", std::to_string(kCheckpointVersion));
  c.add_text("meta/model_config", to_json(model.config()).dump());
  nn::store_params(c, model.params(), kModelPrefix);
  return c;
}

ModelConfig config_from_container(const nn::Container& c) {
  if (!c.contains("meta/format") || c.text("meta/format") != kCheckpointFormat) {
    throw ConfigError("not a model checkpoint (missing or wrong meta/format entry)");
  }
  if (!c.contains("meta/version")) throw ConfigError("checkpoint lacks meta/version");
  const std::string version = c.text("meta/version");
  if (version != std::to_string(kCheckpointVersion)) {
    throw ConfigError("unsupported checkpoint version " + version);
  }
  if (!c.contains("meta/model_config")) throw ConfigError("checkpoint lacks meta/model_config");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(c.text("meta/model_config"));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("meta/model_config is not valid JSON: ") + e.what());
  }
  return model_config_from_json(j);
}

template <typename T>
Model<T> model_from_container(const nn::Container& c) {
  Model<T> model(config_from_container(c), 0);
  nn::restore_params(c, model.params(), kModelPrefix);
  const std::string prefix = kModelPrefix;
  for (const auto& e : c.entries()) {
    if (e.name.compare(0, prefix.size(), prefix) == 0 && !model.params().contains(e.name.substr(prefix.size()))) {
      throw ConfigError("checkpoint entry '" + e.name + "' has no counterpart in the configured model");
    }
  }
  return model;
}

template <typename T>
void save_model(const std::filesystem::path& path, const Model<T>& model) {
  model_to_container(model).write(path);
}

template <typename T>
Model<T> load_model(const std::filesystem::path& path) {
  return model_from_container<T>(nn::Container::read(path));
}

template nn::Container model_to_container(const Model<float>&);
template nn::Container model_to_container(const Model<double>&);
template Model<float> model_from_container(const nn::Container&);
template Model<double> model_from_container(const nn::Container&);
template void save_model(const std::filesystem::path&, const Model<float>&);
template void save_model(const std::filesystem::path&, const Model<double>&);
template Model<float> load_model(const std::filesystem::path&);
template Model<double> load_model(const std::filesystem::path&);

}  // namespace dpaf::net
