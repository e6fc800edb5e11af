#include "arg/relation.hpp"

#include <cmath>
#include <string>

#include "arg/error.hpp"

namespace arg {

namespace {

Tensor uniform(std::size_t rows, std::size_t cols, double bound, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(-bound, bound);
  Tensor t(rows, cols);
  for (double& v : t.data()) v = dist(rng);
  return t;
}

Var bind_optional(Tape& tape, const Tensor& t) {
  return t.empty() ? Var{} : tape.variable(t);
}

Var linear_rows(Var x, Var w, Var b) {
  // x (N×d) · wᵀ (d×d_k) + b
  return add_row_bias(matmul(x, transpose(w)), b);
}

void require_weight(Var v, const char* what) {
  if (!v.valid()) throw ConfigError(std::string("relation weights missing ") + what);
}

}  // namespace

double distance(Point a, Point b) noexcept { return std::hypot(a.x - b.x, a.y - b.y); }

void ActorSet::validate() const {
  const std::size_t n = size();
  if (n == 0) throw PreconditionError("actor set is empty");
  if (feature_dim() == 0) throw PreconditionError("actor features have zero width");
  if (positions.size() != n || frame_index.size() != n) {
    throw ShapeError("actor set: " + std::to_string(n) + " feature rows but " +
                     std::to_string(positions.size()) + " positions and " +
                     std::to_string(frame_index.size()) + " frame indices");
  }
  if (frame_count == 0) throw PreconditionError("actor set: frame count is zero");
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isfinite(positions[i].x) || !std::isfinite(positions[i].y)) {
      throw PreconditionError("actor " + std::to_string(i) + " has a non-finite position");
    }
    if (frame_index[i] >= frame_count) {
      throw PreconditionError("actor " + std::to_string(i) + " frame index out of range");
    }
  }
  if (!(image_width > 0.0) || !(image_height > 0.0)) {
    throw PreconditionError("actor set: image dimensions must be positive");
  }
}

ActorSet permute_actors(const ActorSet& actors, std::span<const std::size_t> perm) {
  if (perm.size() != actors.size()) throw ShapeError("permute_actors: permutation length mismatch");
  ActorSet out = actors;
  for (std::size_t i = 0; i < perm.size(); ++i) {
    const std::size_t src = perm[i];
    for (std::size_t c = 0; c < actors.feature_dim(); ++c) out.features(i, c) = actors.features(src, c);
    out.positions[i] = actors.positions[src];
    out.frame_index[i] = actors.frame_index[src];
  }
  return out;
}

std::string_view to_string(AppearanceRelation a) noexcept {
  switch (a) {
    case AppearanceRelation::DotProduct: return "dot-product";
    case AppearanceRelation::EmbeddedDotProduct: return "embedded-dot-product";
    case AppearanceRelation::RelationNetwork: return "relation-network";
  }
  return "?";
}

std::string_view to_string(PositionRelation p) noexcept {
  switch (p) {
    case PositionRelation::None: return "none";
    case PositionRelation::DistanceMask: return "distance-mask";
    case PositionRelation::DistanceEncoding: return "distance-encoding";
  }
  return "?";
}

AppearanceRelation parse_appearance(std::string_view s) {
  for (auto a : kAllAppearance)
    if (to_string(a) == s) return a;
  throw ConfigError("unknown appearance relation '" + std::string(s) + "'");
}

PositionRelation parse_position(std::string_view s) {
  for (auto p : kAllPosition)
    if (to_string(p) == s) return p;
  throw ConfigError("unknown position relation '" + std::string(s) + "'");
}

void RelationConfig::validate() const {
  if (key_dim < 1) throw ConfigError("d_k must be at least 1");
  if (encoding_dim < 2 || encoding_dim % 2 != 0) {
    throw ConfigError("d_s must be even and at least 2, got " + std::to_string(encoding_dim));
  }
  if (graph_count < 1) throw ConfigError("N_g must be at least 1");
  if (distance_threshold && !(*distance_threshold > 0.0)) {
    throw ConfigError("distance threshold must be positive");
  }
  if (!(encoding_base > 1.0)) throw ConfigError("encoding base must exceed 1");
}

double RelationConfig::threshold_for(const ActorSet& actors) const {
  return distance_threshold ? *distance_threshold : actors.image_width / 5.0;
}

RelationParams init_relation_params(const RelationConfig& config, std::size_t feature_dim,
                                    std::mt19937_64& rng) {
  RelationParams p;
  const std::size_t dk = config.key_dim;
  if (config.appearance != AppearanceRelation::DotProduct) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(feature_dim));
    p.theta_w = uniform(dk, feature_dim, bound, rng);
    p.theta_b = uniform(1, dk, bound, rng);
    p.phi_w = uniform(dk, feature_dim, bound, rng);
    p.phi_b = uniform(1, dk, bound, rng);
  }
  if (config.appearance == AppearanceRelation::RelationNetwork) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(2 * dk));
    p.rn_w = uniform(1, 2 * dk, bound, rng);
    p.rn_b = uniform(1, 1, bound, rng);
  }
  if (config.position == PositionRelation::DistanceEncoding) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(config.encoding_dim));
    p.pos_w = uniform(1, config.encoding_dim, bound, rng);
    p.pos_b = Tensor::scalar(1.0);
  }
  return p;
}

RelationWeights bind_relation_params(Tape& tape, const RelationParams& params) {
  RelationWeights w;
  w.theta_w = bind_optional(tape, params.theta_w);
  w.theta_b = bind_optional(tape, params.theta_b);
  w.phi_w = bind_optional(tape, params.phi_w);
  w.phi_b = bind_optional(tape, params.phi_b);
  w.rn_w = bind_optional(tape, params.rn_w);
  w.rn_b = bind_optional(tape, params.rn_b);
  w.pos_w = bind_optional(tape, params.pos_w);
  w.pos_b = bind_optional(tape, params.pos_b);
  return w;
}

Var appearance_dot_product(Var features) {
  const double d = static_cast<double>(features.cols());
  return scale(matmul(features, transpose(features)), 1.0 / std::sqrt(d));
}

Var appearance_embedded_dot(Var features, Var theta_w, Var theta_b, Var phi_w, Var phi_b) {
  const std::size_t dk = theta_w.rows();
  if (phi_w.rows() != dk || theta_b.cols() != dk || phi_b.cols() != dk) {
    throw ShapeError("embedded dot-product: inconsistent d_k across " + theta_w.value().shape_str() +
                     ", " + phi_w.value().shape_str());
  }
  Var theta = linear_rows(features, theta_w, theta_b);
  Var phi = linear_rows(features, phi_w, phi_b);
  return scale(matmul(theta, transpose(phi)), 1.0 / std::sqrt(static_cast<double>(dk)));
}

Var appearance_relation_network(Var features, Var theta_w, Var theta_b, Var phi_w, Var phi_b,
                                Var w, Var b) {
  const std::size_t dk = theta_w.rows();
  if (w.rows() != 1 || w.cols() != 2 * dk) {
    throw ShapeError("relation network: projection " + w.value().shape_str() + " does not match 2·d_k = " +
                     std::to_string(2 * dk));
  }
  if (phi_w.rows() != dk) {
    throw ShapeError("relation network: θ and φ widths differ: " + theta_w.value().shape_str() +
                     " and " + phi_w.value().shape_str());
  }
  Var theta = linear_rows(features, theta_w, theta_b);
  Var phi = linear_rows(features, phi_w, phi_b);
  // W·[θ_i; φ_j] splits into a per-row term plus a per-column term.
  Var left = matmul(theta, transpose(slice_cols(w, 0, dk)));
  Var right = matmul(phi, transpose(slice_cols(w, dk, dk)));
  return relu(add_scalar(outer_sum(left, right), b));
}

Tensor appearance_dot_product(const Tensor& features) {
  Tape tape;
  return appearance_dot_product(tape.constant(features)).value();
}

Tensor appearance_embedded_dot(const Tensor& features, const RelationParams& params) {
  Tape tape;
  auto w = bind_relation_params(tape, params);
  require_weight(w.theta_w, "θ");
  require_weight(w.phi_w, "φ");
  return appearance_embedded_dot(tape.constant(features), w.theta_w, w.theta_b, w.phi_w, w.phi_b)
      .value();
}

Tensor appearance_relation_network(const Tensor& features, const RelationParams& params) {
  Tape tape;
  auto w = bind_relation_params(tape, params);
  require_weight(w.theta_w, "θ");
  require_weight(w.rn_w, "W");
  return appearance_relation_network(tape.constant(features), w.theta_w, w.theta_b, w.phi_w,
                                     w.phi_b, w.rn_w, w.rn_b)
      .value();
}

Tensor position_distance_mask(std::span<const Point> positions, double threshold) {
  if (!(threshold > 0.0)) throw PreconditionError("distance mask threshold must be positive");
  const std::size_t n = positions.size();
  Tensor mask(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      mask(i, j) = distance(positions[i], positions[j]) <= threshold ? 1.0 : 0.0;
  return mask;
}

std::vector<double> encode_distance(double dist, std::size_t encoding_dim, double base) {
  if (encoding_dim % 2 != 0) {
    throw ConfigError("d_s must be even, got " + std::to_string(encoding_dim));
  }
  std::vector<double> e(encoding_dim);
  const double ds = static_cast<double>(encoding_dim);
  for (std::size_t k = 0; k < encoding_dim / 2; ++k) {
    const double wavelength = std::pow(base, 2.0 * static_cast<double>(k) / ds);
    e[2 * k] = std::sin(dist / wavelength);
    e[2 * k + 1] = std::cos(dist / wavelength);
  }
  return e;
}

Tensor distance_embeddings(std::span<const Point> positions, std::size_t encoding_dim, double base) {
  const std::size_t n = positions.size();
  Tensor out(n * n, encoding_dim);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const auto e = encode_distance(distance(positions[i], positions[j]), encoding_dim, base);
      std::copy(e.begin(), e.end(), out.row(i * n + j).begin());
    }
  }
  return out;
}

Var position_distance_encoding(Tape& tape, std::span<const Point> positions,
                               std::size_t encoding_dim, Var pos_w, Var pos_b, double base) {
  if (pos_w.rows() != 1 || pos_w.cols() != encoding_dim) {
    throw ShapeError("distance encoding: W_s is " + pos_w.value().shape_str() + ", expected [1x" +
                     std::to_string(encoding_dim) + "]");
  }
  const std::size_t n = positions.size();
  Var embedded = tape.constant(distance_embeddings(positions, encoding_dim, base));
  Var scores = relu(add_scalar(matmul(embedded, transpose(pos_w)), pos_b));
  return reshape(scores, n, n);
}

RelationGraphs build_graph_group(Var features, const ActorSet& actors,
                                 const RelationConfig& config,
                                 std::span<const RelationWeights> weights) {
  config.validate();
  actors.validate();
  if (weights.size() != config.graph_count) {
    throw ConfigError("graph group expects " + std::to_string(config.graph_count) +
                      " weight sets, got " + std::to_string(weights.size()));
  }
  Tape& tape = features.tape();
  const std::size_t n = actors.size();

  RelationGraphs out;
  Var mask_var;
  if (config.position == PositionRelation::DistanceMask) {
    out.mask = position_distance_mask(actors.positions, config.threshold_for(actors));
  } else {
    out.mask = Tensor::ones(n, n);
  }
  if (config.position != PositionRelation::DistanceEncoding) mask_var = tape.constant(out.mask);

  // Dot-product logits carry no weights, so every graph shares them.
  Var shared_logits;
  if (config.appearance == AppearanceRelation::DotProduct) shared_logits = appearance_dot_product(features);

  out.graphs.reserve(config.graph_count);
  for (const RelationWeights& w : weights) {
    Var logits;
    switch (config.appearance) {
      case AppearanceRelation::DotProduct:
        logits = shared_logits;
        break;
      case AppearanceRelation::EmbeddedDotProduct:
        require_weight(w.theta_w, "θ");
        require_weight(w.phi_w, "φ");
        logits = appearance_embedded_dot(features, w.theta_w, w.theta_b, w.phi_w, w.phi_b);
        break;
      case AppearanceRelation::RelationNetwork:
        require_weight(w.theta_w, "θ");
        require_weight(w.rn_w, "W");
        logits = appearance_relation_network(features, w.theta_w, w.theta_b, w.phi_w, w.phi_b,
                                             w.rn_w, w.rn_b);
        break;
    }
    if (config.position == PositionRelation::DistanceEncoding) {
      require_weight(w.pos_w, "W_s");
      Var fs = position_distance_encoding(tape, actors.positions, config.encoding_dim, w.pos_w,
                                          w.pos_b, config.encoding_base);
      out.graphs.push_back(weighted_row_softmax(logits, fs));
    } else {
      out.graphs.push_back(masked_row_softmax(logits, mask_var));
    }
  }
  return out;
}

RelationGraphGroup build_graph_group(const ActorSet& actors, const RelationConfig& config,
                                     std::span<const RelationParams> params) {
  Tape tape;
  std::vector<RelationWeights> weights;
  weights.reserve(params.size());
  for (const auto& p : params) weights.push_back(bind_relation_params(tape, p));
  return materialize(build_graph_group(tape.constant(actors.features), actors, config, weights));
}

RelationGraphGroup materialize(const RelationGraphs& graphs) {
  RelationGraphGroup out;
  out.mask = graphs.mask;
  for (Var g : graphs.graphs) out.graphs.push_back(g.value());
  return out;
}

}  // namespace arg
