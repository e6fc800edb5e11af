#include "arg/graph_export.hpp"

#include <iomanip>
#include <sstream>

#include <json.hpp>

#include "arg/error.hpp"

namespace arg {

namespace {

nlohmann::json matrix_json(const Tensor& t) {
  auto rows = nlohmann::json::array();
  for (std::size_t r = 0; r < t.rows(); ++r) {
    auto row = nlohmann::json::array();
    for (double v : t.row(r)) row.push_back(v);
    rows.push_back(std::move(row));
  }
  return rows;
}

std::size_t argmax_first(const std::vector<double>& v) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i)
    if (v[i] > v[best]) best = i;
  return best;
}

}  // namespace

std::vector<double> column_sums(const Tensor& graph) {
  std::vector<double> sums(graph.cols(), 0.0);
  for (std::size_t r = 0; r < graph.rows(); ++r)
    for (std::size_t c = 0; c < graph.cols(); ++c) sums[c] += graph(r, c);
  return sums;
}

std::vector<double> column_sums(const RelationGraphGroup& group) {
  std::vector<double> sums(group.actor_count(), 0.0);
  for (const Tensor& g : group.graphs) {
    const auto s = column_sums(g);
    for (std::size_t i = 0; i < s.size(); ++i) sums[i] += s[i];
  }
  return sums;
}

std::size_t key_actor(const RelationGraphGroup& group) {
  if (group.actor_count() == 0) throw PreconditionError("key_actor: empty graph group");
  return argmax_first(column_sums(group));
}

std::size_t key_actor(const Tensor& graph) {
  if (graph.cols() == 0) throw PreconditionError("key_actor: empty graph");
  return argmax_first(column_sums(graph));
}

std::string graph_group_to_json(const RelationGraphGroup& group) {
  nlohmann::json j;
  j["n"] = group.actor_count();
  auto graphs = nlohmann::json::array();
  for (const Tensor& g : group.graphs) graphs.push_back(matrix_json(g));
  j["graphs"] = std::move(graphs);
  j["mask"] = matrix_json(group.mask);
  j["column_sums"] = column_sums(group);
  j["key_actor"] = key_actor(group);
  return j.dump();
}

std::string graph_group_to_dot(const RelationGraphGroup& group, double threshold) {
  std::ostringstream out;
  out << std::setprecision(6);
  out << "digraph ARG {\n";
  for (std::size_t g = 0; g < group.graphs.size(); ++g) {
    const Tensor& G = group.graphs[g];
    out << "  subgraph cluster_g" << g << " {\n";
    out << "    label=\"graph " << g << "\";\n";
    for (std::size_t i = 0; i < G.rows(); ++i) out << "    g" << g << "_a" << i << " [label=\"" << i << "\"];\n";
    for (std::size_t i = 0; i < G.rows(); ++i) {
      for (std::size_t j = 0; j < G.cols(); ++j) {
        if (G(i, j) < threshold) continue;
        out << "    g" << g << "_a" << j << " -> g" << g << "_a" << i << " [weight=" << G(i, j)
            << ", label=\"" << G(i, j) << "\"];\n";
      }
    }
    out << "  }\n";
  }
  out << "}\n";
  return out.str();
}

}  // namespace arg
