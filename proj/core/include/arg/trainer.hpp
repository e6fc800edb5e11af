#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "arg/dataset.hpp"
#include "arg/model.hpp"
#include "arg/temporal.hpp"

namespace arg {

struct AdamState {
  std::vector<Tensor> m;
  std::vector<Tensor> v;
  std::uint64_t t = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// One bias-corrected Adam update. Moments are allocated on the first call.
void adam_step(std::span<Tensor* const> params, std::span<const Tensor> grads, AdamState& state,
               double lr);

struct LrStep {
  std::size_t epoch = 0;
  double lr = 0.0;
  friend bool operator==(const LrStep&, const LrStep&) = default;
};

/// 2e-4 for the first two thirds of the epochs, 1e-5 after.
std::vector<LrStep> default_lr_schedule(std::size_t epochs);

enum class InferenceMode { Single, Tsn, Sliding };

std::string_view to_string(InferenceMode m) noexcept;
InferenceMode parse_inference_mode(std::string_view s);

struct EvalOptions {
  /// single: one K-frame graph on the centre frames; tsn: tsn_frames
  /// centre frames, each its own graph; sliding: every K-frame window.
  InferenceMode mode = InferenceMode::Single;
  std::size_t stride = 1;
  ScorePooling pooling = ScorePooling::Probabilities;
  std::size_t tsn_frames = 3;

  friend bool operator==(const EvalOptions&, const EvalOptions&) = default;
};

struct TrainConfig {
  /// Class counts and feature width of 0 are taken from the dataset.
  ModelConfig model;
  std::size_t epochs = 30;
  std::size_t batch_size = 16;
  /// Piecewise constant; empty means default_lr_schedule(epochs).
  std::vector<LrStep> lr_schedule;
  double lambda = 1.0;
  /// Evaluate on the held-out set every this many epochs; 0 disables.
  std::size_t eval_every = 1;
  std::uint64_t seed = 1;
  std::size_t threads = 1;
  EvalOptions eval;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  void validate() const;
  std::vector<LrStep> schedule() const;
  double lr_at(std::size_t epoch) const;

  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

struct EpochMetrics {
  std::size_t epoch = 0;
  double loss = 0.0;       // mean training loss
  double group_acc = 0.0;  // on the training windows seen this epoch
  double indiv_acc = 0.0;
  double lr = 0.0;
  double wallclock = 0.0;  // seconds since training started
  bool evaluated = false;
  double eval_group_acc = 0.0;
  double eval_indiv_acc = 0.0;
};

/// One JSON object, no trailing newline.
std::string metrics_to_json(const EpochMetrics& m);

struct TrainResult {
  Model model;
  std::vector<EpochMetrics> history;
};

using EpochCallback = std::function<void(const EpochMetrics&)>;

/// Fills zero dimensions of config.model from the dataset; throws on conflicts.
ModelConfig resolve_model_config(const ModelConfig& config, const DatasetInfo& info);

TrainResult train(const Dataset& data, const TrainConfig& config, const Dataset* eval_data = nullptr,
                  const EpochCallback& on_epoch = {});

struct EvalResult {
  double group_accuracy = 0.0;
  double individual_accuracy = 0.0;
  /// confusion[true][predicted]
  std::vector<std::vector<std::size_t>> confusion;
  std::size_t samples = 0;
};

/// Video-level group scores for one sample under the given inference mode.
PooledScores predict_video(const Model& model, const SceneSample& sample, const EvalOptions& options = {});

EvalResult evaluate(const Dataset& data, const Model& model, const EvalOptions& options = {});

}  // namespace arg
