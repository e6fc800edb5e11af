#include "arg/temporal.hpp"

#include <string>

#include "arg/error.hpp"

namespace arg {

std::vector<std::size_t> sample_frames(std::size_t total, std::size_t k, SampleMode mode,
                                       std::mt19937_64& rng) {
  if (k < 1) throw SamplingError("K must be at least 1");
  if (total < k) {
    throw SamplingError("cannot sample " + std::to_string(k) + " frames from a video of " +
                        std::to_string(total));
  }
  const std::size_t base = total / k;
  const std::size_t extra = total % k;
  std::vector<std::size_t> out;
  out.reserve(k);
  std::size_t start = 0;
  for (std::size_t s = 0; s < k; ++s) {
    const std::size_t len = base + (s < extra ? 1 : 0);
    if (mode == SampleMode::Center) {
      out.push_back(start + len / 2);
    } else {
      std::uniform_int_distribution<std::size_t> pick(0, len - 1);
      out.push_back(start + pick(rng));
    }
    start += len;
  }
  return out;
}

std::vector<std::size_t> sample_frames(std::size_t total, std::size_t k, SampleMode mode,
                                       std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return sample_frames(total, k, mode, rng);
}

ActorSet assemble_temporal_actorset(std::span<const ActorSet> frames) {
  if (frames.empty()) throw PreconditionError("temporal assembly needs at least one frame");
  const std::size_t d = frames[0].feature_dim();
  std::size_t n = 0;
  for (const auto& f : frames) {
    if (f.size() == 0) throw PreconditionError("temporal assembly: empty frame");
    if (f.feature_dim() != d) {
      throw ShapeError("temporal assembly: feature width " + std::to_string(f.feature_dim()) +
                       " differs from " + std::to_string(d));
    }
    if (f.image_width != frames[0].image_width || f.image_height != frames[0].image_height) {
      throw PreconditionError("temporal assembly: frames use different coordinate systems");
    }
    n += f.size();
  }
  ActorSet out;
  out.features = Tensor(n, d);
  out.positions.reserve(n);
  out.frame_index.reserve(n);
  out.frame_count = frames.size();
  out.image_width = frames[0].image_width;
  out.image_height = frames[0].image_height;
  std::size_t row = 0;
  for (std::size_t k = 0; k < frames.size(); ++k) {
    const ActorSet& f = frames[k];
    for (std::size_t i = 0; i < f.size(); ++i, ++row) {
      std::copy(f.features.row(i).begin(), f.features.row(i).end(), out.features.row(row).begin());
      out.positions.push_back(f.positions[i]);
      out.frame_index.push_back(k);
    }
  }
  return out;
}

ActorSet assemble_temporal_actorset(std::span<const ActorSet> video,
                                    std::span<const std::size_t> frame_ids) {
  std::vector<ActorSet> picked;
  picked.reserve(frame_ids.size());
  for (std::size_t id : frame_ids) {
    if (id >= video.size()) throw SamplingError("frame id " + std::to_string(id) + " out of range");
    picked.push_back(video[id]);
  }
  return assemble_temporal_actorset(picked);
}

std::string_view to_string(ScorePooling p) noexcept {
  return p == ScorePooling::Probabilities ? "probabilities" : "logits";
}

ScorePooling parse_pooling(std::string_view s) {
  if (s == "probabilities") return ScorePooling::Probabilities;
  if (s == "logits") return ScorePooling::Logits;
  throw ConfigError("unknown score pooling '" + std::string(s) + "'");
}

PooledScores pool_scores(std::vector<Tensor> per_window) {
  if (per_window.empty()) throw InferenceError("no windows to pool");
  PooledScores out;
  out.scores = Tensor(1, per_window[0].cols());
  for (const auto& s : per_window) add_inplace(out.scores, s);
  for (double& v : out.scores.data()) v /= static_cast<double>(per_window.size());
  out.prediction = argmax_row(out.scores);
  out.per_window = std::move(per_window);
  return out;
}

namespace {

Tensor window_scores(const Model& model, const ActorSet& actors, ScorePooling pooling) {
  Tensor logits = forward(model, actors).group_logits;
  return pooling == ScorePooling::Probabilities ? softmax_rows(logits) : logits;
}

}  // namespace

PooledScores sliding_window_predict(std::span<const ActorSet> video, std::size_t window,
                                    std::size_t stride, const Model& model, ScorePooling pooling) {
  if (window < 1 || stride < 1) throw InferenceError("window and stride must be at least 1");
  if (video.size() < window) {
    throw InferenceError("video of " + std::to_string(video.size()) +
                         " frames is shorter than the window K = " + std::to_string(window));
  }
  std::vector<Tensor> scores;
  for (std::size_t start = 0; start + window <= video.size(); start += stride) {
    scores.push_back(window_scores(model, assemble_temporal_actorset(video.subspan(start, window)), pooling));
  }
  return pool_scores(std::move(scores));
}

PooledScores tsn_predict(std::span<const ActorSet> frames, const Model& model, ScorePooling pooling) {
  if (frames.empty()) throw InferenceError("TSN needs at least one frame");
  std::vector<Tensor> scores;
  for (const ActorSet& f : frames) scores.push_back(window_scores(model, assemble_temporal_actorset({&f, 1}), pooling));
  return pool_scores(std::move(scores));
}

}  // namespace arg
