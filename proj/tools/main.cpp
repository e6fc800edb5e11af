// arg: command-line front end for the actor relation graph engine.

#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "arg/ablation.hpp"
#include "arg/checkpoint.hpp"
#include "arg/config_json.hpp"
#include "arg/dataset.hpp"
#include "arg/error.hpp"
#include "arg/gradcheck.hpp"
#include "arg/graph_export.hpp"
#include "arg/log.hpp"
#include "arg/temporal.hpp"
#include "arg/trainer.hpp"

namespace {

using nlohmann::json;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Bad values in flags or config files are usage errors, not runtime failures.
template <class F>
auto as_usage(F&& f) {
  try {
    return f();
  } catch (const arg::ConfigError& e) {
    throw UsageError(e.what());
  }
}

template <class T>
CLI::Option* json_flag(CLI::App* app, const std::string& name, json& overrides, const std::string& key,
                       const std::string& help) {
  return app->add_option_function<T>(
      name, [&overrides, key](const T& v) { overrides[key] = v; }, help);
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw arg::Error("cannot open '" + path + "' for writing");
  out << text;
  if (!out) throw arg::Error("failed writing '" + path + "'");
}

// "0:2e-4,20:1e-5" → [[0, 2e-4], [20, 1e-5]]
json parse_schedule(const std::string& text) {
  json steps = json::array();
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto colon = item.find(':');
    if (colon == std::string::npos) throw UsageError("lr schedule entries look like EPOCH:LR, got '" + item + "'");
    try {
      std::size_t used = 0;
      const unsigned long long epoch = std::stoull(item.substr(0, colon), &used);
      if (used != colon) throw std::invalid_argument(item);
      const double lr = std::stod(item.substr(colon + 1));
      steps.push_back({epoch, lr});
    } catch (const std::logic_error&) {
      throw UsageError("cannot parse lr schedule entry '" + item + "'");
    }
  }
  if (steps.empty()) throw UsageError("empty lr schedule");
  return steps;
}

// ---- training flags shared by train and ablation ----

struct TrainFlags {
  std::string config_path;
  json overrides = json::object();
  std::string lr_schedule;
  double lr = 0.0;
  CLI::Option* lr_opt = nullptr;
  CLI::Option* schedule_opt = nullptr;

  void add_to(CLI::App* app) {
    app->add_option("--config", config_path, "Training config JSON; flags override its values")
        ->check(CLI::ExistingFile);
    json_flag<std::string>(app, "--variant", overrides, "variant", "Model variant: arg or base");
    json_flag<std::string>(app, "--appearance", overrides, "appearance",
                           "dot-product, embedded-dot-product or relation-network");
    json_flag<std::string>(app, "--position", overrides, "position", "none, distance-mask or distance-encoding");
    json_flag<std::string>(app, "--fusion", overrides, "fusion", "early, late-sum or late-concat");
    json_flag<std::size_t>(app, "--graphs", overrides, "graph_count", "Number of relation graphs N_g");
    json_flag<std::size_t>(app, "--key-dim", overrides, "key_dim", "Embedding width d_k");
    json_flag<std::size_t>(app, "--encoding-dim", overrides, "encoding_dim", "Distance encoding width d_s");
    json_flag<double>(app, "--distance-threshold", overrides, "distance_threshold",
                      "Distance mask threshold in pixels (default: image width / 5)");
    json_flag<double>(app, "--encoding-base", overrides, "encoding_base", "Distance encoding wavelength base");
    json_flag<std::size_t>(app, "--frames", overrides, "frames", "Frames per temporal graph K");
    json_flag<std::size_t>(app, "--epochs", overrides, "epochs", "Training epochs");
    json_flag<std::size_t>(app, "--batch-size", overrides, "batch_size", "Mini-batch size");
    lr_opt = app->add_option("--lr", lr, "Constant learning rate");
    schedule_opt = app->add_option("--lr-schedule", lr_schedule, "Piecewise learning rate, e.g. 0:2e-4,20:1e-5")
                       ->excludes(lr_opt);
    json_flag<double>(app, "--lambda", overrides, "lambda", "Weight of the individual action loss");
    json_flag<std::size_t>(app, "--eval-every", overrides, "eval_every", "Evaluate every N epochs (0: never)");
    json_flag<std::uint64_t>(app, "--seed", overrides, "seed", "Initialization and shuffling seed");
    json_flag<std::size_t>(app, "--threads", overrides, "threads", "Worker threads per batch");
    json_flag<std::string>(app, "--eval-mode", overrides, "eval_mode", "single, tsn or sliding");
    json_flag<std::size_t>(app, "--stride", overrides, "stride", "Sliding window stride");
    json_flag<std::string>(app, "--pooling", overrides, "pooling", "Score pooling: probabilities or logits");
    json_flag<std::size_t>(app, "--tsn-frames", overrides, "tsn_frames", "Frames averaged in tsn mode");
  }

  arg::TrainConfig resolve() {
    return as_usage([&] {
      arg::TrainConfig config;
      if (!config_path.empty()) config = arg::load_train_config(config_path, config);
      json o = overrides;
      if (*lr_opt) o["lr_schedule"] = json::array({json::array({0, lr})});
      if (*schedule_opt) o["lr_schedule"] = parse_schedule(lr_schedule);
      config = arg::train_config_from_json(o.dump(), config);
      config.validate();
      return config;
    });
  }
};

// ---- gen-data ----

struct GenData {
  std::string config_path;
  std::string out;
  std::size_t videos = 200;
  std::uint64_t first_id = 0;
  json overrides = json::object();

  void add_to(CLI::App* app) {
    app->add_option("--out", out, "Output dataset file")->required();
    app->add_option("--videos", videos, "Number of videos")->capture_default_str();
    app->add_option("--first-id", first_id, "Video id of the first video")->capture_default_str();
    app->add_option("--config", config_path, "Generator config JSON")->check(CLI::ExistingFile);
    json_flag<std::uint64_t>(app, "--seed", overrides, "seed", "Generator seed");
    json_flag<std::size_t>(app, "--min-actors", overrides, "min_actors", "Fewest actors per video");
    json_flag<std::size_t>(app, "--max-actors", overrides, "max_actors", "Most actors per video");
    json_flag<std::size_t>(app, "--feature-dim", overrides, "feature_dim", "Feature width d");
    json_flag<std::size_t>(app, "--action-classes", overrides, "action_classes", "Action classes C_I");
    json_flag<std::size_t>(app, "--activity-classes", overrides, "activity_classes", "Group classes C_G (even)");
    json_flag<std::size_t>(app, "--frames", overrides, "frames", "Frames per video T");
    json_flag<double>(app, "--feature-noise", overrides, "feature_noise", "Feature noise sigma");
    json_flag<double>(app, "--position-noise", overrides, "position_noise", "Per-frame position jitter, pixels");
    json_flag<double>(app, "--image-width", overrides, "image_width", "Image width, pixels");
    json_flag<double>(app, "--image-height", overrides, "image_height", "Image height, pixels");
  }

  int run() {
    const arg::SynthConfig config = as_usage([&] {
      arg::SynthConfig c;
      if (!config_path.empty()) c = arg::load_synth_config(config_path, c);
      c = arg::synth_config_from_json(overrides.dump(), c);
      c.validate();
      return c;
    });
    const arg::Dataset data = arg::make_dataset(config, videos, first_id);
    arg::write_dataset(out, data);
    arg::log_info("wrote " + std::to_string(data.size()) + " videos to " + out);
    return 0;
  }
};

// ---- train ----

void print_ablation(const arg::Dataset& train_data, const arg::Dataset& test, const std::string& study,
                    const arg::TrainConfig& base, const std::string& out) {
  const auto runs = as_usage([&] { return arg::ablation_runs(arg::parse_study(study), base); });
  const auto rows = arg::run_ablation(train_data, test, runs, [](const arg::AblationRow& r) {
    arg::log_info(r.label + ": group " + std::to_string(r.group_acc));
  });
  const std::string table = arg::format_ablation(rows);
  std::cout << table;
  if (!out.empty()) write_text(out, table);
}

struct Train {
  TrainFlags flags;
  std::string data_path, eval_path, out, metrics, ablation;

  void add_to(CLI::App* app) {
    app->add_option("--data", data_path, "Training dataset")->required();
    app->add_option("--eval-data", eval_path, "Held-out dataset evaluated during training");
    app->add_option("--out", out, "Checkpoint path (with --ablation: table output path)");
    app->add_option("--metrics", metrics, "JSON-lines metrics file (default: stdout)");
    app->add_option("--ablation", ablation, "Run a study instead: table1, graphs, fusion or temporal");
    flags.add_to(app);
  }

  int run() {
    arg::TrainConfig config = flags.resolve();
    if (ablation.empty() && out.empty()) throw UsageError("--out is required unless --ablation is given");
    if (!ablation.empty() && eval_path.empty()) throw UsageError("--ablation needs --eval-data");
    const arg::Dataset data = arg::read_dataset(data_path);
    std::unique_ptr<arg::Dataset> eval_data;
    if (!eval_path.empty()) eval_data = std::make_unique<arg::Dataset>(arg::read_dataset(eval_path));
    if (!ablation.empty()) {
      print_ablation(data, *eval_data, ablation, config, out);
      return 0;
    }

    std::ofstream metrics_file;
    if (!metrics.empty()) {
      metrics_file.open(metrics, std::ios::trunc);
      if (!metrics_file) throw arg::Error("cannot open '" + metrics + "' for writing");
    }
    std::ostream& sink = metrics.empty() ? std::cout : metrics_file;
    const arg::TrainResult r = arg::train(data, config, eval_data.get(), [&](const arg::EpochMetrics& m) {
      sink << arg::metrics_to_json(m) << '\n';
      sink.flush();
    });
    arg::save_checkpoint(out, r.model);
    arg::log_info("saved checkpoint to " + out);
    return 0;
  }
};

// ---- eval ----

struct Eval {
  std::string checkpoint, data_path, mode = "single", pooling = "probabilities", out;
  std::size_t stride = 1, tsn_frames = 3;

  void add_to(CLI::App* app) {
    app->add_option("--checkpoint", checkpoint, "Model checkpoint")->required();
    app->add_option("--data", data_path, "Dataset to evaluate")->required();
    app->add_option("--mode", mode, "single, tsn or sliding")->capture_default_str();
    app->add_option("--stride", stride, "Sliding window stride")->capture_default_str();
    app->add_option("--pooling", pooling, "probabilities or logits")->capture_default_str();
    app->add_option("--tsn-frames", tsn_frames, "Frames averaged in tsn mode")->capture_default_str();
    app->add_option("--out", out, "Also write the JSON report here");
  }

  int run() {
    const arg::EvalOptions options = as_usage([&] {
      arg::EvalOptions o;
      o.mode = arg::parse_inference_mode(mode);
      o.pooling = arg::parse_pooling(pooling);
      o.stride = stride;
      o.tsn_frames = tsn_frames;
      if (stride < 1 || tsn_frames < 1) throw arg::ConfigError("stride and tsn-frames must be at least 1");
      return o;
    });
    const arg::Model model = arg::load_checkpoint(checkpoint);
    const arg::Dataset data = arg::read_dataset(data_path);
    const arg::EvalResult r = arg::evaluate(data, model, options);
    const json report = {{"samples", r.samples},
                         {"group_acc", r.group_accuracy},
                         {"indiv_acc", r.individual_accuracy},
                         {"confusion", r.confusion},
                         {"mode", std::string(arg::to_string(options.mode))}};
    std::cout << report.dump() << '\n';
    if (!out.empty()) write_text(out, report.dump(2) + "\n");
    return 0;
  }
};

// ---- gradcheck ----

struct Gradcheck {
  arg::GradcheckOptions options;
  std::string fault;

  void add_to(CLI::App* app) {
    app->add_option("--inject-fault", fault,
                    "Negate one op's backward rule (e.g. matmul, row_softmax); the check must then fail");
    app->add_option("--tolerance", options.tolerance, "Max relative error")->capture_default_str();
    app->add_option("--floor", options.floor, "Relative error denominator floor")->capture_default_str();
    app->add_option("--step", options.step, "Finite difference half-width")->capture_default_str();
    app->add_option("--seed", options.seed, "Random seed")->capture_default_str();
  }

  int run() {
    if (!fault.empty()) {
      const auto op = arg::op_from_name(fault);
      if (!op || *op == arg::OpKind::Leaf) throw UsageError("unknown op '" + fault + "'");
      options.inject_fault = *op;
    }
    const arg::GradcheckReport report = arg::run_gradcheck(options);
    auto print = [](const arg::GradcheckRow& r) {
      std::printf("  %-52s %12.3e  %s\n", r.name.c_str(), r.max_rel_error, r.passed ? "ok" : "FAIL");
    };
    std::printf("ops (max relative error, tolerance %.1e)\n", report.tolerance);
    for (const auto& r : report.ops) print(r);
    std::printf("models: appearance / position / fusion (%zu combinations)\n", report.models.size());
    for (const auto& r : report.models) print(r);
    std::printf("%s\n", report.passed() ? "PASS" : "FAIL");
    return report.passed() ? 0 : 1;
  }
};

// ---- export-graph ----

struct ExportGraph {
  std::string checkpoint, data_path, out;
  std::size_t sample = 0;
  double threshold = 1e-3;

  void add_to(CLI::App* app) {
    app->add_option("--checkpoint", checkpoint, "Model checkpoint")->required();
    app->add_option("--data", data_path, "Dataset holding the sample")->required();
    app->add_option("--sample", sample, "Sample index")->capture_default_str();
    app->add_option("--out", out, "Output prefix; writes PREFIX.json and PREFIX.dot")->required();
    app->add_option("--threshold", threshold, "Smallest edge weight drawn in DOT")->capture_default_str();
  }

  int run() {
    const arg::Model model = arg::load_checkpoint(checkpoint);
    const arg::Dataset data = arg::read_dataset(data_path);
    if (model.config.variant != arg::ModelVariant::Arg) throw arg::Error("base models have no relation graphs");
    if (data.info.feature_dim != model.config.feature_dim) {
      throw arg::Error("checkpoint expects d = " + std::to_string(model.config.feature_dim) +
                       " but the dataset has d = " + std::to_string(data.info.feature_dim));
    }
    if (sample >= data.size()) {
      throw arg::Error("sample " + std::to_string(sample) + " out of range (dataset has " +
                       std::to_string(data.size()) + ")");
    }
    const arg::SceneSample& s = data.samples[sample];
    const auto frames = arg::sample_frames(s.frames.size(), model.config.frames, arg::SampleMode::Center,
                                           std::uint64_t{0});
    const arg::ActorSet actors = arg::assemble_temporal_actorset(s.frames, frames);
    const arg::RelationGraphGroup group =
        arg::build_graph_group(actors, model.config.relation, model.params.relations);

    json j = json::parse(arg::graph_group_to_json(group));
    const std::size_t n = s.actor_count();
    const std::size_t key = arg::key_actor(group);
    j["video_id"] = s.video_id;
    j["frames"] = frames;
    j["actors_per_frame"] = n;
    j["key_actor_identity"] = key % n;
    j["designated_key_actors"] = s.key_actors;
    write_text(out + ".json", j.dump(2) + "\n");
    write_text(out + ".dot", arg::graph_group_to_dot(group, threshold));
    std::cout << json{{"key_actor", key},
                      {"key_actor_identity", key % n},
                      {"designated_key_actors", s.key_actors}}
                     .dump()
              << '\n';
    return 0;
  }
};

// ---- ablation ----

struct Ablation {
  TrainFlags flags;
  std::string data_path, eval_path, study = "table1", out;

  void add_to(CLI::App* app) {
    app->add_option("--data", data_path, "Training dataset")->required();
    app->add_option("--eval-data", eval_path, "Test dataset")->required();
    app->add_option("--study", study, "table1, graphs, fusion or temporal")->capture_default_str();
    app->add_option("--out", out, "Also write the table here");
    flags.add_to(app);
  }

  int run() {
    const arg::TrainConfig config = flags.resolve();
    const arg::Dataset data = arg::read_dataset(data_path);
    const arg::Dataset test = arg::read_dataset(eval_path);
    print_ablation(data, test, study, config, out);
    return 0;
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Actor relation graph engine: synthetic data, training, evaluation and graph export"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "arg 0.1.0");

  GenData gen;
  Train train;
  Eval eval;
  Gradcheck grad;
  ExportGraph exp;
  Ablation abl;
  std::function<int()> command;

  auto bind = [&](const char* name, const char* help, auto& cmd) {
    CLI::App* sub = app.add_subcommand(name, help);
    cmd.add_to(sub);
    sub->callback([&command, &cmd] { command = [&cmd] { return cmd.run(); }; });
  };
  bind("gen-data", "Generate a synthetic relational dataset", gen);
  bind("train", "Train a model and write a checkpoint", train);
  bind("eval", "Evaluate a checkpoint on a dataset", eval);
  bind("gradcheck", "Compare analytic and finite-difference gradients", grad);
  bind("export-graph", "Write one sample's relation graphs as JSON and DOT", exp);
  bind("ablation", "Train and compare model variants", abl);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    return command();
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
