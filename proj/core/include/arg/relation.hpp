#pragma once

#include <cstddef>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "arg/tape.hpp"
#include "arg/tensor.hpp"

namespace arg {

struct Point {
  double x = 0.0;
  double y = 0.0;
  friend bool operator==(const Point&, const Point&) = default;
};

double distance(Point a, Point b) noexcept;

/// The nodes of a relation graph: N actors, possibly pooled from K frames.
struct ActorSet {
  Tensor features;                       // N×d appearance features
  std::vector<Point> positions;          // box centers, pixels
  std::vector<std::size_t> frame_index;  // in [0, frame_count)
  std::size_t frame_count = 1;
  double image_width = 1280.0;
  double image_height = 720.0;

  std::size_t size() const noexcept { return features.rows(); }
  std::size_t feature_dim() const noexcept { return features.cols(); }

  /// Throws PreconditionError/ShapeError on violated invariants.
  void validate() const;

  friend bool operator==(const ActorSet&, const ActorSet&) = default;
};

/// Reorders actors: result actor i is input actor perm[i].
ActorSet permute_actors(const ActorSet& actors, std::span<const std::size_t> perm);

enum class AppearanceRelation { DotProduct, EmbeddedDotProduct, RelationNetwork };
enum class PositionRelation { None, DistanceMask, DistanceEncoding };

std::string_view to_string(AppearanceRelation a) noexcept;
std::string_view to_string(PositionRelation p) noexcept;
AppearanceRelation parse_appearance(std::string_view s);
PositionRelation parse_position(std::string_view s);

inline constexpr AppearanceRelation kAllAppearance[] = {
    AppearanceRelation::DotProduct, AppearanceRelation::EmbeddedDotProduct,
    AppearanceRelation::RelationNetwork};
inline constexpr PositionRelation kAllPosition[] = {
    PositionRelation::None, PositionRelation::DistanceMask, PositionRelation::DistanceEncoding};

struct RelationConfig {
  AppearanceRelation appearance = AppearanceRelation::EmbeddedDotProduct;
  PositionRelation position = PositionRelation::DistanceMask;
  std::size_t key_dim = 256;       // d_k, embedding width for θ/φ
  std::size_t encoding_dim = 32;   // d_s, must be even
  /// μ in pixels. Unset means one fifth of the actor set's image width.
  std::optional<double> distance_threshold;
  /// Wavelength base of the sinusoidal distance encoding.
  double encoding_base = 1000.0;
  std::size_t graph_count = 16;    // N_g

  void validate() const;
  double threshold_for(const ActorSet& actors) const;

  friend bool operator==(const RelationConfig&, const RelationConfig&) = default;
};

/// Learnable weights of one relation graph. Which tensors are present
/// depends on the appearance/position variant; absent ones are empty.
struct RelationParams {
  Tensor theta_w;  // d_k×d
  Tensor theta_b;  // 1×d_k
  Tensor phi_w;    // d_k×d
  Tensor phi_b;    // 1×d_k
  Tensor rn_w;     // 1×2d_k
  Tensor rn_b;     // 1×1
  Tensor pos_w;    // 1×d_s
  Tensor pos_b;    // 1×1
};

/// Tape handles for one graph's weights; invalid handles for absent tensors.
struct RelationWeights {
  Var theta_w, theta_b, phi_w, phi_b;
  Var rn_w, rn_b;
  Var pos_w, pos_b;
};

/// Uniform ±1/√fan_in initialization; the distance-encoding bias starts at 1.
RelationParams init_relation_params(const RelationConfig& config, std::size_t feature_dim,
                                    std::mt19937_64& rng);
RelationWeights bind_relation_params(Tape& tape, const RelationParams& params);

// Appearance relations f_a, as N×N logit matrices.

/// ⟨x_i, x_j⟩ / √d.
Var appearance_dot_product(Var features);
/// ⟨θ(x_i), φ(x_j)⟩ / √d_k with θ(x) = Wθ·x + bθ, φ(x) = Wφ·x + bφ.
Var appearance_embedded_dot(Var features, Var theta_w, Var theta_b, Var phi_w, Var phi_b);
/// ReLU(W·[θ(x_i); φ(x_j)] + b).
Var appearance_relation_network(Var features, Var theta_w, Var theta_b, Var phi_w, Var phi_b,
                                Var w, Var b);

Tensor appearance_dot_product(const Tensor& features);
Tensor appearance_embedded_dot(const Tensor& features, const RelationParams& params);
Tensor appearance_relation_network(const Tensor& features, const RelationParams& params);

// Position relations f_s.

/// 1 where the Euclidean distance is ≤ μ, else 0.
Tensor position_distance_mask(std::span<const Point> positions, double threshold);
/// Sinusoidal embedding of a scalar distance: E[2k] = sin(d / base^(2k/d_s)),
/// E[2k+1] = cos(d / base^(2k/d_s)).
std::vector<double> encode_distance(double dist, std::size_t encoding_dim, double base = 1000.0);
/// Row i·N + j holds encode_distance(|p_i − p_j|): an N²×d_s matrix.
Tensor distance_embeddings(std::span<const Point> positions, std::size_t encoding_dim,
                           double base = 1000.0);
/// ReLU(W_s·E(d_ij) + b_s) as an N×N matrix.
Var position_distance_encoding(Tape& tape, std::span<const Point> positions,
                               std::size_t encoding_dim, Var pos_w, Var pos_b,
                               double base = 1000.0);

/// N_g row-stochastic relation graphs over one actor set.
struct RelationGraphs {
  std::vector<Var> graphs;
  Tensor mask;
};

RelationGraphs build_graph_group(Var features, const ActorSet& actors,
                                 const RelationConfig& config,
                                 std::span<const RelationWeights> weights);

/// Materialized graph group, as exported and inspected outside a tape.
struct RelationGraphGroup {
  std::vector<Tensor> graphs;
  Tensor mask;

  std::size_t actor_count() const noexcept { return mask.rows(); }
};

RelationGraphGroup build_graph_group(const ActorSet& actors, const RelationConfig& config,
                                     std::span<const RelationParams> params);
RelationGraphGroup materialize(const RelationGraphs& graphs);

}  // namespace arg
