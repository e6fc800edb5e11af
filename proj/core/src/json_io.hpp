#pragma once

#include <json.hpp>

#include "arg/model.hpp"
#include "arg/synth.hpp"
#include "arg/trainer.hpp"

namespace arg::detail {

using nlohmann::json;

json model_json(const ModelConfig& c);
json train_json(const TrainConfig& c);
json synth_json(const SynthConfig& c);

/// Overrides the fields named by the keys of `j`; unknown keys throw ConfigError.
void apply_model_json(const json& j, ModelConfig& c);
void apply_train_json(const json& j, TrainConfig& c);
void apply_synth_json(const json& j, SynthConfig& c);

json parse_json(std::string_view text, const char* what);

}  // namespace arg::detail
