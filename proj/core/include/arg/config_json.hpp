#pragma once

#include <string>
#include <string_view>

#include "arg/model.hpp"
#include "arg/synth.hpp"
#include "arg/trainer.hpp"

namespace arg {

// JSON views of the configuration structs. Parsing starts from `base` and
// overrides only the keys present, so callers layer defaults, a config file
// and flags in that order. Unknown keys raise ConfigError.
//
// Training configs are flat: the model keys (appearance, position, key_dim,
// encoding_dim, distance_threshold, encoding_base, graph_count, fusion,
// variant, feature_dim, action_classes, activity_classes, frames) sit next to
// epochs, batch_size, lr_schedule ([[epoch, lr], ...]), lambda, eval_every,
// seed, threads, eval_mode, stride, pooling, tsn_frames, beta1, beta2, epsilon.

std::string to_json(const ModelConfig& config);
std::string to_json(const TrainConfig& config);
std::string to_json(const SynthConfig& config);

ModelConfig model_config_from_json(std::string_view text, const ModelConfig& base = {});
TrainConfig train_config_from_json(std::string_view text, const TrainConfig& base = {});
SynthConfig synth_config_from_json(std::string_view text, const SynthConfig& base = {});

TrainConfig load_train_config(const std::string& path, const TrainConfig& base = {});
SynthConfig load_synth_config(const std::string& path, const SynthConfig& base = {});

}  // namespace arg
