#include "arg/synth.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <string>

#include "arg/error.hpp"

namespace arg {

namespace {

constexpr std::uint64_t kPrototypeSeed = 0x41524750524f544fULL;

std::size_t pair_class(std::size_t pair_classes, std::size_t a, std::size_t b) {
  if (pair_classes == 1) return 0;
  if (pair_classes == 2) return a == b ? 1 : 0;
  return (a + b) % pair_classes;
}

}  // namespace

void SynthConfig::validate() const {
  if (min_actors < 2 || max_actors < min_actors) {
    throw ConfigError("actor count range must satisfy 2 <= min <= max");
  }
  if (action_classes < 2) throw ConfigError("C_I must be at least 2");
  if (activity_classes < 2 || activity_classes % 2 != 0) {
    throw ConfigError("C_G must be even and at least 2");
  }
  const std::size_t pairs = activity_classes / 2;
  if (pairs > 2 && pairs > 2 * action_classes - 1) {
    throw ConfigError("C_G/2 pair classes cannot exceed 2·C_I − 1");
  }
  if (feature_dim < action_classes) throw ConfigError("feature dimension must be at least C_I");
  if (!(image_width > 0.0) || !(image_height > 0.0)) throw ConfigError("image size must be positive");
  if (feature_noise < 0.0 || position_noise < 0.0) throw ConfigError("noise levels must be non-negative");
  if (frames < 1) throw ConfigError("frames per video must be at least 1");
}

std::size_t relational_label(const SynthConfig& config, std::size_t action_a,
                             std::size_t action_b, bool near) {
  return 2 * pair_class(config.activity_classes / 2, action_a, action_b) + (near ? 1 : 0);
}

Tensor appearance_prototypes(const SynthConfig& config) {
  const std::size_t d = config.feature_dim;
  const std::size_t count = 2 * config.action_classes + 2;
  std::mt19937_64 rng(kPrototypeSeed ^ d);
  std::normal_distribution<double> normal(0.0, 1.0);
  Tensor protos(count, d);
  for (std::size_t r = 0; r < count; ++r) {
    auto row = protos.row(r);
    for (double& v : row) v = normal(rng);
    // Gram-Schmidt against earlier rows while there is room.
    if (r < d) {
      for (std::size_t q = 0; q < r; ++q) {
        double dot = 0.0;
        for (std::size_t c = 0; c < d; ++c) dot += row[c] * protos(q, c);
        for (std::size_t c = 0; c < d; ++c) row[c] -= dot * protos(q, c);
      }
    }
    double norm = 0.0;
    for (double v : row) norm += v * v;
    norm = std::sqrt(norm);
    for (double& v : row) v /= norm;
  }
  return protos;
}

std::vector<double> actor_prototype(const SynthConfig& config, std::size_t action, ActorRole role) {
  const Tensor protos = appearance_prototypes(config);
  const std::size_t ci = config.action_classes;
  std::vector<double> out(config.feature_dim, 0.0);
  const std::size_t action_row = role == ActorRole::Ordinary ? action : ci + action;
  for (std::size_t c = 0; c < out.size(); ++c) out[c] = protos(action_row, c);
  if (role != ActorRole::Ordinary) {
    const std::size_t role_row = 2 * ci + (role == ActorRole::KeyA ? 0 : 1);
    for (std::size_t c = 0; c < out.size(); ++c) out[c] += protos(role_row, c);
  }
  return out;
}

SceneSample generate_video(const SynthConfig& config, std::uint64_t video_id) {
  config.validate();
  std::mt19937_64 rng(config.seed ^ video_id);
  auto uniform_index = [&](std::size_t lo, std::size_t hi) {
    return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
  };
  auto uniform_real = [&](double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
  };
  std::normal_distribution<double> normal(0.0, 1.0);

  const std::size_t ci = config.action_classes;
  const std::size_t label = uniform_index(0, config.activity_classes - 1);
  const bool near = label % 2 == 1;

  const std::size_t n = uniform_index(config.min_actors, config.max_actors);
  std::vector<std::size_t> actions(n);
  for (auto& a : actions) a = uniform_index(0, ci - 1);

  const std::size_t key_a = uniform_index(0, n - 1);
  std::size_t key_b = uniform_index(0, n - 2);
  if (key_b >= key_a) ++key_b;

  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t a = 0; a < ci; ++a)
    for (std::size_t b = 0; b < ci; ++b)
      if (relational_label(config, a, b, near) == label) pairs.emplace_back(a, b);
  const auto [action_a, action_b] = pairs[uniform_index(0, pairs.size() - 1)];
  actions[key_a] = action_a;
  actions[key_b] = action_b;

  const double w = config.image_width;
  const double h = config.image_height;
  const double mu = config.key_threshold();
  std::vector<Point> base(n);
  for (auto& p : base) p = {uniform_real(0.0, w), uniform_real(0.0, h)};
  // Key pair distance stays well clear of μ so per-frame jitter cannot flip it.
  for (;;) {
    const double dist = near ? uniform_real(0.3 * mu, 0.8 * mu) : uniform_real(1.25 * mu, 2.5 * mu);
    const double angle = uniform_real(0.0, 2.0 * std::numbers::pi);
    const Point b{base[key_a].x + dist * std::cos(angle), base[key_a].y + dist * std::sin(angle)};
    if (b.x >= 0.0 && b.x <= w && b.y >= 0.0 && b.y <= h) {
      base[key_b] = b;
      break;
    }
    base[key_a] = {uniform_real(0.0, w), uniform_real(0.0, h)};
  }

  std::vector<std::vector<double>> protos(n);
  for (std::size_t i = 0; i < n; ++i) {
    const ActorRole role = i == key_a ? ActorRole::KeyA : i == key_b ? ActorRole::KeyB : ActorRole::Ordinary;
    protos[i] = actor_prototype(config, actions[i], role);
  }

  SceneSample s;
  s.video_id = video_id;
  s.group_label = label;
  s.action_labels = actions;
  s.key_actors = {static_cast<std::int32_t>(key_a), static_cast<std::int32_t>(key_b)};
  s.frames.reserve(config.frames);
  for (std::size_t t = 0; t < config.frames; ++t) {
    ActorSet f;
    f.features = Tensor(n, config.feature_dim);
    f.positions.resize(n);
    f.frame_index.assign(n, 0);
    f.frame_count = 1;
    f.image_width = w;
    f.image_height = h;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t c = 0; c < config.feature_dim; ++c)
        f.features(i, c) = protos[i][c] + config.feature_noise * normal(rng);
      f.positions[i] = {base[i].x + config.position_noise * normal(rng),
                        base[i].y + config.position_noise * normal(rng)};
    }
    s.frames.push_back(std::move(f));
  }
  return s;
}

std::vector<SceneSample> generate(const SynthConfig& config, std::size_t count,
                                  std::uint64_t first_video_id) {
  config.validate();
  std::vector<SceneSample> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) out.push_back(generate_video(config, first_video_id + i));
  return out;
}

}  // namespace arg
