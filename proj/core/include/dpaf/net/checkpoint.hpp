#pragma once

#include <filesystem>
#include <string>

#include "dpaf/net/model.hpp"
#include "dpaf/nn/serialize.hpp"

// A checkpoint is a parameter container holding
//   meta/format        text "dpaf-checkpoint"
//   meta/version       text, checkpoint layout version
//   meta/model_config  text, the ModelConfig as JSON
//   model/<param>      one tensor per model parameter
// Trainers may append further entries (optimizer moments, train state).
namespace dpaf::net {

inline constexpr const char* kCheckpointFormat = "dpaf-checkpoint";
inline constexpr int kCheckpointVersion = 1;
inline constexpr const char* kModelPrefix = "model/";

template <typename T>
nn::Container model_to_container(const Model<T>& model);

/// Rebuilds the model described by the embedded config and loads its
/// parameters. Throws ConfigError naming the first offending entry when the
/// stored tensors disagree with the config.
template <typename T>
Model<T> model_from_container(const nn::Container& c);

ModelConfig config_from_container(const nn::Container& c);

template <typename T>
void save_model(const std::filesystem::path& path, const Model<T>& model);

template <typename T>
Model<T> load_model(const std::filesystem::path& path);

}  // namespace dpaf::net
