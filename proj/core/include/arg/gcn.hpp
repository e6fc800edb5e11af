#pragma once

#include <optional>
#include <random>
#include <span>
#include <string_view>
#include <vector>

#include "arg/tape.hpp"
#include "arg/tensor.hpp"

namespace arg {

/// How the N_g graphs of a group are combined around the GCN layer.
enum class Fusion { Early, LateSum, LateConcat };

std::string_view to_string(Fusion f) noexcept;
Fusion parse_fusion(std::string_view s);

inline constexpr Fusion kAllFusion[] = {Fusion::Early, Fusion::LateSum, Fusion::LateConcat};

/// GCN weights. Late schemes carry one d×d matrix per graph; early fusion
/// carries exactly one. Concatenation adds an (N_g·d)×d projection.
struct GcnParams {
  std::vector<Tensor> weights;
  Tensor projection;
};

struct GcnWeights {
  std::vector<Var> weights;
  Var projection;
};

/// Uniform ±1/√d for every weight, including the concat projection (fan-in N_g·d).
GcnParams init_gcn_params(Fusion fusion, std::size_t graph_count, std::size_t feature_dim,
                          std::mt19937_64& rng);
GcnWeights bind_gcn_params(Tape& tape, const GcnParams& params);

/// ReLU(G·Z·W).
Var gcn_layer(Var graph, Var z, Var w);
/// Σᵢ ReLU(Gⁱ·Z·Wⁱ).
Var fuse_late_sum(std::span<const Var> graphs, Var z, const GcnWeights& weights);
/// [ReLU(G¹·Z·W¹) | … | ReLU(G^{N_g}·Z·W^{N_g})] · projection.
Var fuse_late_concat(std::span<const Var> graphs, Var z, const GcnWeights& weights);
/// ReLU((Σᵢ Gⁱ)·Z·W). The summed graph is not renormalized.
Var fuse_early(std::span<const Var> graphs, Var z, const GcnWeights& weights);
Var fuse(Fusion fusion, std::span<const Var> graphs, Var z, const GcnWeights& weights);

Tensor gcn_layer(const Tensor& graph, const Tensor& z, const Tensor& w);
Tensor fuse(Fusion fusion, std::span<const Tensor> graphs, const Tensor& z, const GcnParams& params);

}  // namespace arg
