#include "arg/gcn.hpp"

#include <cmath>
#include <string>

#include "arg/error.hpp"

namespace arg {

namespace {

void require_count(const GcnWeights& w, std::size_t expected, const char* scheme) {
  if (w.weights.size() != expected) {
    throw ConfigError(std::string(scheme) + " fusion expects " + std::to_string(expected) +
                      " GCN weight matrices, got " + std::to_string(w.weights.size()));
  }
}

void require_graphs(std::span<const Var> graphs) {
  if (graphs.empty()) throw ConfigError("fusion over an empty graph group");
}

}  // namespace

std::string_view to_string(Fusion f) noexcept {
  switch (f) {
    case Fusion::Early: return "early";
    case Fusion::LateSum: return "late-sum";
    case Fusion::LateConcat: return "late-concat";
  }
  return "?";
}

Fusion parse_fusion(std::string_view s) {
  for (auto f : kAllFusion)
    if (to_string(f) == s) return f;
  throw ConfigError("unknown fusion scheme '" + std::string(s) + "'");
}

GcnParams init_gcn_params(Fusion fusion, std::size_t graph_count, std::size_t feature_dim,
                          std::mt19937_64& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(feature_dim));
  std::uniform_real_distribution<double> dist(-bound, bound);
  auto draw = [&](std::size_t r, std::size_t c, std::uniform_real_distribution<double>& d) {
    Tensor t(r, c);
    for (double& v : t.data()) v = d(rng);
    return t;
  };
  GcnParams p;
  const std::size_t count = fusion == Fusion::Early ? 1 : graph_count;
  for (std::size_t i = 0; i < count; ++i) p.weights.push_back(draw(feature_dim, feature_dim, dist));
  if (fusion == Fusion::LateConcat) {
    const double pb = 1.0 / std::sqrt(static_cast<double>(graph_count * feature_dim));
    std::uniform_real_distribution<double> pdist(-pb, pb);
    p.projection = draw(graph_count * feature_dim, feature_dim, pdist);
  }
  return p;
}

GcnWeights bind_gcn_params(Tape& tape, const GcnParams& params) {
  GcnWeights w;
  for (const auto& t : params.weights) w.weights.push_back(tape.variable(t));
  if (!params.projection.empty()) w.projection = tape.variable(params.projection);
  return w;
}

Var gcn_layer(Var graph, Var z, Var w) {
  if (graph.rows() != graph.cols() || graph.cols() != z.rows()) {
    throw ShapeError("gcn_layer: graph " + graph.value().shape_str() + " does not match features " +
                     z.value().shape_str());
  }
  return relu(matmul(matmul(graph, z), w));
}

Var fuse_late_sum(std::span<const Var> graphs, Var z, const GcnWeights& weights) {
  require_graphs(graphs);
  require_count(weights, graphs.size(), "late-sum");
  Var out = gcn_layer(graphs[0], z, weights.weights[0]);
  for (std::size_t i = 1; i < graphs.size(); ++i) out = add(out, gcn_layer(graphs[i], z, weights.weights[i]));
  return out;
}

Var fuse_late_concat(std::span<const Var> graphs, Var z, const GcnWeights& weights) {
  require_graphs(graphs);
  require_count(weights, graphs.size(), "late-concat");
  if (!weights.projection.valid()) throw ConfigError("late-concat fusion requires a projection matrix");
  std::vector<Var> parts;
  parts.reserve(graphs.size());
  for (std::size_t i = 0; i < graphs.size(); ++i) parts.push_back(gcn_layer(graphs[i], z, weights.weights[i]));
  Var stacked = parts.size() == 1 ? parts[0] : concat_cols(parts);
  if (weights.projection.rows() != stacked.cols()) {
    throw ShapeError("late-concat: projection " + weights.projection.value().shape_str() +
                     " does not match concatenated width " + std::to_string(stacked.cols()));
  }
  return matmul(stacked, weights.projection);
}

Var fuse_early(std::span<const Var> graphs, Var z, const GcnWeights& weights) {
  require_graphs(graphs);
  require_count(weights, 1, "early");
  Var summed = graphs[0];
  for (std::size_t i = 1; i < graphs.size(); ++i) summed = add(summed, graphs[i]);
  return gcn_layer(summed, z, weights.weights[0]);
}

Var fuse(Fusion fusion, std::span<const Var> graphs, Var z, const GcnWeights& weights) {
  switch (fusion) {
    case Fusion::Early: return fuse_early(graphs, z, weights);
    case Fusion::LateSum: return fuse_late_sum(graphs, z, weights);
    case Fusion::LateConcat: return fuse_late_concat(graphs, z, weights);
  }
  throw ConfigError("unknown fusion scheme");
}

Tensor gcn_layer(const Tensor& graph, const Tensor& z, const Tensor& w) {
  Tape tape;
  return gcn_layer(tape.constant(graph), tape.constant(z), tape.constant(w)).value();
}

Tensor fuse(Fusion fusion, std::span<const Tensor> graphs, const Tensor& z, const GcnParams& params) {
  Tape tape;
  std::vector<Var> g;
  for (const auto& t : graphs) g.push_back(tape.constant(t));
  return fuse(fusion, g, tape.constant(z), bind_gcn_params(tape, params)).value();
}

}  // namespace arg
