#include "arg/config_json.hpp"

#include "arg/error.hpp"
#include "binary_io.hpp"
#include "json_io.hpp"

namespace arg {

namespace detail {

namespace {

template <class T>
T get_as(const json& v, const std::string& key) {
  try {
    return v.get<T>();
  } catch (const json::exception&) {
    throw ConfigError("config key '" + key + "' has the wrong type: " + v.dump());
  }
}

std::size_t get_count(const json& v, const std::string& key) {
  if (!v.is_number_integer() && !v.is_number_unsigned()) {
    throw ConfigError("config key '" + key + "' must be a non-negative integer, got " + v.dump());
  }
  if (v.is_number_integer() && v.get<long long>() < 0) {
    throw ConfigError("config key '" + key + "' must be non-negative, got " + v.dump());
  }
  return v.get<std::size_t>();
}

bool apply_model_key(const std::string& key, const json& v, ModelConfig& c) {
  RelationConfig& r = c.relation;
  if (key == "appearance") r.appearance = parse_appearance(get_as<std::string>(v, key));
  else if (key == "position") r.position = parse_position(get_as<std::string>(v, key));
  else if (key == "key_dim") r.key_dim = get_count(v, key);
  else if (key == "encoding_dim") r.encoding_dim = get_count(v, key);
  else if (key == "distance_threshold") {
    if (v.is_null()) r.distance_threshold.reset();
    else r.distance_threshold = get_as<double>(v, key);
  } else if (key == "encoding_base") r.encoding_base = get_as<double>(v, key);
  else if (key == "graph_count") r.graph_count = get_count(v, key);
  else if (key == "fusion") c.fusion = parse_fusion(get_as<std::string>(v, key));
  else if (key == "variant") c.variant = parse_variant(get_as<std::string>(v, key));
  else if (key == "feature_dim") c.feature_dim = get_count(v, key);
  else if (key == "action_classes") c.action_classes = get_count(v, key);
  else if (key == "activity_classes") c.activity_classes = get_count(v, key);
  else if (key == "frames") c.frames = get_count(v, key);
  else return false;
  return true;
}

void require_object(const json& j, const char* what) {
  if (!j.is_object()) throw ConfigError(std::string(what) + " must be a JSON object");
}

}  // namespace

json parse_json(std::string_view text, const char* what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("malformed ") + what + ": " + e.what());
  }
}

json model_json(const ModelConfig& c) {
  const RelationConfig& r = c.relation;
  json j = {
      {"appearance", std::string(to_string(r.appearance))},
      {"position", std::string(to_string(r.position))},
      {"key_dim", r.key_dim},
      {"encoding_dim", r.encoding_dim},
      {"distance_threshold", nullptr},
      {"encoding_base", r.encoding_base},
      {"graph_count", r.graph_count},
      {"fusion", std::string(to_string(c.fusion))},
      {"variant", std::string(to_string(c.variant))},
      {"feature_dim", c.feature_dim},
      {"action_classes", c.action_classes},
      {"activity_classes", c.activity_classes},
      {"frames", c.frames},
  };
  if (r.distance_threshold) j["distance_threshold"] = *r.distance_threshold;
  return j;
}

json train_json(const TrainConfig& c) {
  json j = model_json(c.model);
  json schedule = json::array();
  for (const LrStep& s : c.lr_schedule) schedule.push_back({s.epoch, s.lr});
  j["epochs"] = c.epochs;
  j["batch_size"] = c.batch_size;
  j["lr_schedule"] = schedule;
  j["lambda"] = c.lambda;
  j["eval_every"] = c.eval_every;
  j["seed"] = c.seed;
  j["threads"] = c.threads;
  j["eval_mode"] = std::string(to_string(c.eval.mode));
  j["stride"] = c.eval.stride;
  j["pooling"] = std::string(to_string(c.eval.pooling));
  j["tsn_frames"] = c.eval.tsn_frames;
  j["beta1"] = c.beta1;
  j["beta2"] = c.beta2;
  j["epsilon"] = c.epsilon;
  return j;
}

json synth_json(const SynthConfig& c) {
  return {
      {"min_actors", c.min_actors},
      {"max_actors", c.max_actors},
      {"feature_dim", c.feature_dim},
      {"action_classes", c.action_classes},
      {"activity_classes", c.activity_classes},
      {"image_width", c.image_width},
      {"image_height", c.image_height},
      {"feature_noise", c.feature_noise},
      {"position_noise", c.position_noise},
      {"frames", c.frames},
      {"seed", c.seed},
  };
}

void apply_model_json(const json& j, ModelConfig& c) {
  require_object(j, "model config");
  for (const auto& [key, v] : j.items()) {
    if (!apply_model_key(key, v, c)) throw ConfigError("unknown model config key '" + key + "'");
  }
}

void apply_train_json(const json& j, TrainConfig& c) {
  require_object(j, "training config");
  for (const auto& [key, v] : j.items()) {
    if (apply_model_key(key, v, c.model)) continue;
    if (key == "epochs") c.epochs = get_count(v, key);
    else if (key == "batch_size") c.batch_size = get_count(v, key);
    else if (key == "lr_schedule") {
      if (!v.is_array()) throw ConfigError("lr_schedule must be an array of [epoch, lr] pairs");
      c.lr_schedule.clear();
      for (const json& step : v) {
        if (!step.is_array() || step.size() != 2) {
          throw ConfigError("lr_schedule entries must be [epoch, lr] pairs, got " + step.dump());
        }
        c.lr_schedule.push_back({get_count(step[0], key), get_as<double>(step[1], key)});
      }
    } else if (key == "lambda") c.lambda = get_as<double>(v, key);
    else if (key == "eval_every") c.eval_every = get_count(v, key);
    else if (key == "seed") c.seed = get_as<std::uint64_t>(v, key);
    else if (key == "threads") c.threads = get_count(v, key);
    else if (key == "eval_mode") c.eval.mode = parse_inference_mode(get_as<std::string>(v, key));
    else if (key == "stride") c.eval.stride = get_count(v, key);
    else if (key == "pooling") c.eval.pooling = parse_pooling(get_as<std::string>(v, key));
    else if (key == "tsn_frames") c.eval.tsn_frames = get_count(v, key);
    else if (key == "beta1") c.beta1 = get_as<double>(v, key);
    else if (key == "beta2") c.beta2 = get_as<double>(v, key);
    else if (key == "epsilon") c.epsilon = get_as<double>(v, key);
    else throw ConfigError("unknown training config key '" + key + "'");
  }
}

void apply_synth_json(const json& j, SynthConfig& c) {
  require_object(j, "synthetic data config");
  for (const auto& [key, v] : j.items()) {
    if (key == "min_actors") c.min_actors = get_count(v, key);
    else if (key == "max_actors") c.max_actors = get_count(v, key);
    else if (key == "feature_dim") c.feature_dim = get_count(v, key);
    else if (key == "action_classes") c.action_classes = get_count(v, key);
    else if (key == "activity_classes") c.activity_classes = get_count(v, key);
    else if (key == "image_width") c.image_width = get_as<double>(v, key);
    else if (key == "image_height") c.image_height = get_as<double>(v, key);
    else if (key == "feature_noise") c.feature_noise = get_as<double>(v, key);
    else if (key == "position_noise") c.position_noise = get_as<double>(v, key);
    else if (key == "frames") c.frames = get_count(v, key);
    else if (key == "seed") c.seed = get_as<std::uint64_t>(v, key);
    else throw ConfigError("unknown synthetic data config key '" + key + "'");
  }
}

}  // namespace detail

std::string to_json(const ModelConfig& config) { return detail::model_json(config).dump(2); }
std::string to_json(const TrainConfig& config) { return detail::train_json(config).dump(2); }
std::string to_json(const SynthConfig& config) { return detail::synth_json(config).dump(2); }

ModelConfig model_config_from_json(std::string_view text, const ModelConfig& base) {
  ModelConfig c = base;
  detail::apply_model_json(detail::parse_json(text, "model config"), c);
  return c;
}

TrainConfig train_config_from_json(std::string_view text, const TrainConfig& base) {
  TrainConfig c = base;
  detail::apply_train_json(detail::parse_json(text, "training config"), c);
  return c;
}

SynthConfig synth_config_from_json(std::string_view text, const SynthConfig& base) {
  SynthConfig c = base;
  detail::apply_synth_json(detail::parse_json(text, "synthetic data config"), c);
  return c;
}

TrainConfig load_train_config(const std::string& path, const TrainConfig& base) {
  return train_config_from_json(detail::read_file(path), base);
}

SynthConfig load_synth_config(const std::string& path, const SynthConfig& base) {
  return synth_config_from_json(detail::read_file(path), base);
}

}  // namespace arg
