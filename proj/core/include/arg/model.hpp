#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "arg/gcn.hpp"
#include "arg/relation.hpp"
#include "arg/tape.hpp"
#include "arg/tensor.hpp"

namespace arg {

/// `Arg` runs relational reasoning; `Base` classifies raw actor features.
enum class ModelVariant { Arg, Base };

std::string_view to_string(ModelVariant v) noexcept;
ModelVariant parse_variant(std::string_view s);

struct ModelConfig {
  RelationConfig relation;
  Fusion fusion = Fusion::LateSum;
  ModelVariant variant = ModelVariant::Arg;
  std::size_t feature_dim = 0;       // d
  std::size_t action_classes = 0;    // C_I
  std::size_t activity_classes = 0;  // C_G
  /// Frames pooled into one temporal graph (K).
  std::size_t frames = 3;

  void validate() const;

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

struct ModelParams {
  std::vector<RelationParams> relations;  // one per graph, unshared
  GcnParams gcn;
  Tensor individual_w;  // C_I×d
  Tensor individual_b;  // 1×C_I
  Tensor group_w;       // C_G×d
  Tensor group_b;       // 1×C_G
};

struct Model {
  ModelConfig config;
  ModelParams params;
};

/// Relation and GCN weights uniform ±1/√fan_in; classifier weights uniform
/// ±1/√d with zero biases.
Model init_model(const ModelConfig& config, std::uint64_t seed);

struct NamedTensor {
  std::string name;
  Tensor* tensor;
};
struct ConstNamedTensor {
  std::string name;
  const Tensor* tensor;
};

/// Every learnable tensor in canonical order. Gradients, optimizer state and
/// checkpoints all use this order.
std::vector<NamedTensor> parameter_list(ModelParams& params);
std::vector<ConstNamedTensor> parameter_list(const ModelParams& params);

/// Model parameters registered as tape leaves.
struct BoundModel {
  std::vector<RelationWeights> relations;
  GcnWeights gcn;
  Var individual_w, individual_b, group_w, group_b;
  std::vector<Var> leaves;  // same order as parameter_list
};

BoundModel bind_model(Tape& tape, const ModelParams& params);

struct ForwardOutput {
  Var group_logits;       // 1×C_G
  Var individual_logits;  // N×C_I
  RelationGraphs graphs;  // empty for the base path
};

/// graphs → fusion → residual sum → per-dimension max-pool → two heads.
/// `bypass_relations` forces the base path regardless of the configured variant.
ForwardOutput forward(const BoundModel& model, const ActorSet& actors, const ModelConfig& config,
                      bool bypass_relations = false);

/// CE(group) + λ·mean_i CE(individual_i).
Var joint_loss(Var group_logits, Var individual_logits, std::size_t group_label,
               std::span<const std::size_t> action_labels, double lambda);

struct Prediction {
  Tensor group_logits;
  Tensor individual_logits;
};

Prediction forward(const Model& model, const ActorSet& actors);
Prediction predict_base(const Model& model, const ActorSet& actors);
double joint_loss(const Prediction& prediction, std::size_t group_label,
                  std::span<const std::size_t> action_labels, double lambda);

struct SampleGradient {
  double loss = 0.0;
  Prediction prediction;
  std::vector<Tensor> grads;  // parameter_list order
};

SampleGradient loss_and_gradient(const Model& model, const ActorSet& actors,
                                 std::size_t group_label,
                                 std::span<const std::size_t> action_labels, double lambda,
                                 const TapeOptions& options = {});

/// Row-wise softmax of a logit matrix.
Tensor softmax_rows(const Tensor& logits);

/// Index of the largest entry of row r; ties go to the lowest index.
std::size_t argmax_row(const Tensor& t, std::size_t r = 0);

}  // namespace arg
