#include "arg/model.hpp"

#include <cmath>
#include <random>
#include <string>

#include "arg/error.hpp"

namespace arg {

namespace {

template <class Params, class Out, class Fn>
void walk_params(Params& p, Out& out, Fn&& make) {
  for (std::size_t g = 0; g < p.relations.size(); ++g) {
    auto& r = p.relations[g];
    const std::string prefix = "relation." + std::to_string(g) + ".";
    auto visit = [&](const char* field, auto& t) {
      if (!t.empty()) out.push_back(make(prefix + field, t));
    };
    visit("theta_w", r.theta_w);
    visit("theta_b", r.theta_b);
    visit("phi_w", r.phi_w);
    visit("phi_b", r.phi_b);
    visit("rn_w", r.rn_w);
    visit("rn_b", r.rn_b);
    visit("pos_w", r.pos_w);
    visit("pos_b", r.pos_b);
  }
  for (std::size_t i = 0; i < p.gcn.weights.size(); ++i)
    out.push_back(make("gcn.weight." + std::to_string(i), p.gcn.weights[i]));
  if (!p.gcn.projection.empty()) out.push_back(make("gcn.projection", p.gcn.projection));
  out.push_back(make("individual.weight", p.individual_w));
  out.push_back(make("individual.bias", p.individual_b));
  out.push_back(make("group.weight", p.group_w));
  out.push_back(make("group.bias", p.group_b));
}

Tensor uniform(std::size_t rows, std::size_t cols, double bound, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(-bound, bound);
  Tensor t(rows, cols);
  for (double& v : t.data()) v = dist(rng);
  return t;
}

Var classifier(Var x, Var w, Var b) { return add_row_bias(matmul(x, transpose(w)), b); }

void check_labels(std::size_t group_label, std::size_t group_classes,
                  std::span<const std::size_t> action_labels, std::size_t rows,
                  std::size_t action_classes) {
  if (group_label >= group_classes) {
    throw LabelError("group label " + std::to_string(group_label) + " out of range [0, " +
                     std::to_string(group_classes) + ")");
  }
  if (action_labels.size() != rows) {
    throw LabelError(std::to_string(action_labels.size()) + " action labels for " +
                     std::to_string(rows) + " actors");
  }
  for (std::size_t y : action_labels) {
    if (y >= action_classes) {
      throw LabelError("action label " + std::to_string(y) + " out of range [0, " +
                       std::to_string(action_classes) + ")");
    }
  }
}

}  // namespace

std::string_view to_string(ModelVariant v) noexcept {
  return v == ModelVariant::Arg ? "arg" : "base";
}

ModelVariant parse_variant(std::string_view s) {
  if (s == "arg") return ModelVariant::Arg;
  if (s == "base") return ModelVariant::Base;
  throw ConfigError("unknown model variant '" + std::string(s) + "'");
}

void ModelConfig::validate() const {
  relation.validate();
  if (feature_dim == 0) throw ConfigError("feature dimension must be positive");
  if (action_classes < 1) throw ConfigError("need at least one action class");
  if (activity_classes < 1) throw ConfigError("need at least one activity class");
  if (frames < 1) throw ConfigError("frames per sample (K) must be at least 1");
}

Model init_model(const ModelConfig& config, std::uint64_t seed) {
  config.validate();
  std::mt19937_64 rng(seed);
  Model m{config, {}};
  const std::size_t d = config.feature_dim;
  for (std::size_t g = 0; g < config.relation.graph_count; ++g)
    m.params.relations.push_back(init_relation_params(config.relation, d, rng));
  m.params.gcn = init_gcn_params(config.fusion, config.relation.graph_count, d, rng);
  const double bound = 1.0 / std::sqrt(static_cast<double>(d));
  m.params.individual_w = uniform(config.action_classes, d, bound, rng);
  m.params.individual_b = Tensor(1, config.action_classes);
  m.params.group_w = uniform(config.activity_classes, d, bound, rng);
  m.params.group_b = Tensor(1, config.activity_classes);
  return m;
}

std::vector<NamedTensor> parameter_list(ModelParams& params) {
  std::vector<NamedTensor> out;
  walk_params(params, out, [](std::string name, Tensor& t) { return NamedTensor{std::move(name), &t}; });
  return out;
}

std::vector<ConstNamedTensor> parameter_list(const ModelParams& params) {
  std::vector<ConstNamedTensor> out;
  walk_params(params, out,
              [](std::string name, const Tensor& t) { return ConstNamedTensor{std::move(name), &t}; });
  return out;
}

BoundModel bind_model(Tape& tape, const ModelParams& params) {
  BoundModel b;
  auto bind = [&](const Tensor& t) {
    if (t.empty()) return Var{};
    Var v = tape.variable(t);
    b.leaves.push_back(v);
    return v;
  };
  // Same traversal order as walk_params.
  for (const auto& r : params.relations) {
    RelationWeights w;
    w.theta_w = bind(r.theta_w);
    w.theta_b = bind(r.theta_b);
    w.phi_w = bind(r.phi_w);
    w.phi_b = bind(r.phi_b);
    w.rn_w = bind(r.rn_w);
    w.rn_b = bind(r.rn_b);
    w.pos_w = bind(r.pos_w);
    w.pos_b = bind(r.pos_b);
    b.relations.push_back(w);
  }
  for (const auto& t : params.gcn.weights) b.gcn.weights.push_back(bind(t));
  b.gcn.projection = bind(params.gcn.projection);
  b.individual_w = bind(params.individual_w);
  b.individual_b = bind(params.individual_b);
  b.group_w = bind(params.group_w);
  b.group_b = bind(params.group_b);
  return b;
}

ForwardOutput forward(const BoundModel& model, const ActorSet& actors, const ModelConfig& config,
                      bool bypass_relations) {
  actors.validate();
  if (actors.feature_dim() != config.feature_dim) {
    throw ShapeError("actor features have width " + std::to_string(actors.feature_dim()) +
                     " but the model expects " + std::to_string(config.feature_dim));
  }
  Tape& tape = model.individual_w.tape();
  Var x = tape.constant(actors.features);
  ForwardOutput out;
  Var aggregated = x;
  if (config.variant == ModelVariant::Arg && !bypass_relations) {
    out.graphs = build_graph_group(x, actors, config.relation, model.relations);
    aggregated = add(x, fuse(config.fusion, out.graphs.graphs, x, model.gcn));
  }
  out.individual_logits = classifier(aggregated, model.individual_w, model.individual_b);
  out.group_logits = classifier(col_max(aggregated), model.group_w, model.group_b);
  return out;
}

Var joint_loss(Var group_logits, Var individual_logits, std::size_t group_label,
               std::span<const std::size_t> action_labels, double lambda) {
  check_labels(group_label, group_logits.cols(), action_labels, individual_logits.rows(),
               individual_logits.cols());
  const std::size_t label[] = {group_label};
  Var group_term = scale(sum_all(pick(log_softmax_rows(group_logits), label)), -1.0);
  if (lambda == 0.0) return group_term;
  const double n = static_cast<double>(action_labels.size());
  Var indiv_term = scale(sum_all(pick(log_softmax_rows(individual_logits), action_labels)), -lambda / n);
  return add(group_term, indiv_term);
}

Prediction forward(const Model& model, const ActorSet& actors) {
  Tape tape;
  auto bound = bind_model(tape, model.params);
  auto out = forward(bound, actors, model.config);
  return {out.group_logits.value(), out.individual_logits.value()};
}

Prediction predict_base(const Model& model, const ActorSet& actors) {
  Tape tape;
  auto bound = bind_model(tape, model.params);
  auto out = forward(bound, actors, model.config, /*bypass_relations=*/true);
  return {out.group_logits.value(), out.individual_logits.value()};
}

double joint_loss(const Prediction& prediction, std::size_t group_label,
                  std::span<const std::size_t> action_labels, double lambda) {
  Tape tape;
  return joint_loss(tape.constant(prediction.group_logits), tape.constant(prediction.individual_logits),
                    group_label, action_labels, lambda)
      .value()
      .item();
}

SampleGradient loss_and_gradient(const Model& model, const ActorSet& actors,
                                 std::size_t group_label,
                                 std::span<const std::size_t> action_labels, double lambda,
                                 const TapeOptions& options) {
  Tape tape(options);
  auto bound = bind_model(tape, model.params);
  auto out = forward(bound, actors, model.config);
  Var loss = joint_loss(out.group_logits, out.individual_logits, group_label, action_labels, lambda);
  tape.backward(loss);
  SampleGradient result;
  result.loss = loss.value().item();
  result.prediction = {out.group_logits.value(), out.individual_logits.value()};
  result.grads.reserve(bound.leaves.size());
  for (Var v : bound.leaves) result.grads.push_back(tape.grad(v));
  return result;
}

Tensor softmax_rows(const Tensor& logits) {
  Tensor out = logits;
  for (std::size_t r = 0; r < out.rows(); ++r) {
    auto row = out.row(r);
    double m = row[0];
    for (double v : row) m = std::max(m, v);
    double s = 0.0;
    for (double& v : row) {
      v = std::exp(v - m);
      s += v;
    }
    for (double& v : row) v /= s;
  }
  return out;
}

std::size_t argmax_row(const Tensor& t, std::size_t r) {
  std::size_t best = 0;
  for (std::size_t c = 1; c < t.cols(); ++c)
    if (t(r, c) > t(r, best)) best = c;
  return best;
}

}  // namespace arg
