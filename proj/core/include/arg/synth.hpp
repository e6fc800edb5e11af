#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "arg/relation.hpp"
#include "arg/tensor.hpp"

namespace arg {

/// Synthetic multi-actor scenes whose group label depends on how two key
/// actors relate: whether they stand within image_width/5 of each other and
/// how their actions pair up.
struct SynthConfig {
  std::size_t min_actors = 6;
  std::size_t max_actors = 10;
  std::size_t feature_dim = 16;      // d
  std::size_t action_classes = 3;    // C_I
  std::size_t activity_classes = 4;  // C_G, even
  double image_width = 1280.0;
  double image_height = 720.0;
  double feature_noise = 0.1;   // σ_f
  double position_noise = 4.0;  // σ_p, pixels
  std::size_t frames = 10;      // T
  std::uint64_t seed = 7;

  void validate() const;
  double key_threshold() const noexcept { return image_width / 5.0; }

  friend bool operator==(const SynthConfig&, const SynthConfig&) = default;
};

enum class ActorRole { Ordinary, KeyA, KeyB };

struct SceneSample {
  std::vector<ActorSet> frames;            // T frames, same actor order in each
  std::vector<std::size_t> action_labels;  // per actor
  std::size_t group_label = 0;
  std::uint64_t video_id = 0;
  std::array<std::int32_t, 2> key_actors = {-1, -1};  // -1 when unknown

  std::size_t actor_count() const noexcept { return action_labels.size(); }

  friend bool operator==(const SceneSample&, const SceneSample&) = default;
};

/// Group label for the key pair. Labels are 2·pair_class + near, where the
/// pair class is 0 for C_G = 2, [a == b] for C_G = 4, and (a + b) mod (C_G/2)
/// beyond that.
std::size_t relational_label(const SynthConfig& config, std::size_t action_a,
                             std::size_t action_b, bool near);

/// Appearance directions: rows [0, C_I) are ordinary actions, [C_I, 2C_I)
/// key-actor actions, then role A and role B. Orthonormal while they fit in
/// d, unit-norm random beyond. Independent of the generation seed.
Tensor appearance_prototypes(const SynthConfig& config);
/// Noise-free appearance of an actor with the given action and role.
std::vector<double> actor_prototype(const SynthConfig& config, std::size_t action, ActorRole role);

/// One video, seeded by seed ^ video_id.
SceneSample generate_video(const SynthConfig& config, std::uint64_t video_id);
/// `count` videos with ids first_video_id, first_video_id + 1, ...
std::vector<SceneSample> generate(const SynthConfig& config, std::size_t count,
                                  std::uint64_t first_video_id = 0);

}  // namespace arg
