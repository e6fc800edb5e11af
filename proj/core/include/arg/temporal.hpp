#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string_view>
#include <vector>

#include "arg/model.hpp"
#include "arg/relation.hpp"

namespace arg {

enum class SampleMode { Random, Center };

/// Splits [0, total) into k contiguous segments (the first total % k are one
/// frame longer) and picks one index per segment: uniformly in Random mode,
/// the segment's middle frame in Center mode. Output is strictly increasing.
std::vector<std::size_t> sample_frames(std::size_t total, std::size_t k, SampleMode mode,
                                       std::mt19937_64& rng);
std::vector<std::size_t> sample_frames(std::size_t total, std::size_t k, SampleMode mode,
                                       std::uint64_t seed);

/// Concatenates K per-frame actor sets into one temporal actor set; actor
/// rows keep frame order and `frame_index` records the source frame.
ActorSet assemble_temporal_actorset(std::span<const ActorSet> frames);
ActorSet assemble_temporal_actorset(std::span<const ActorSet> video,
                                    std::span<const std::size_t> frame_ids);

enum class ScorePooling { Probabilities, Logits };

std::string_view to_string(ScorePooling p) noexcept;
ScorePooling parse_pooling(std::string_view s);

struct PooledScores {
  Tensor scores;                   // 1×C_G; a probability vector under Probabilities pooling
  std::size_t prediction = 0;      // argmax, lowest class id on ties
  std::vector<Tensor> per_window;  // per-window softmax (or logits), in window order
};

/// Runs the model on every window of `window` consecutive frames (step
/// `stride`) and mean-pools the window scores in window order.
PooledScores sliding_window_predict(std::span<const ActorSet> video, std::size_t window,
                                    std::size_t stride, const Model& model,
                                    ScorePooling pooling = ScorePooling::Probabilities);

/// Runs the model on each frame as its own one-frame graph and averages.
PooledScores tsn_predict(std::span<const ActorSet> frames, const Model& model,
                         ScorePooling pooling = ScorePooling::Probabilities);

/// Mean of score rows in the given order, with argmax.
PooledScores pool_scores(std::vector<Tensor> per_window);

}  // namespace arg
