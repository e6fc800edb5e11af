#include <doctest.h>

#include <cmath>
#include <map>
#include <random>

#include "arg/error.hpp"
#include "arg/temporal.hpp"
#include "oracles.hpp"

using namespace arg;

namespace {

ModelConfig tiny_config(std::size_t frames) {
  ModelConfig c;
  c.relation.key_dim = 4;
  c.relation.encoding_dim = 4;
  c.relation.graph_count = 2;
  c.feature_dim = 5;
  c.action_classes = 3;
  c.activity_classes = 4;
  c.frames = frames;
  return c;
}

std::vector<ActorSet> random_video(std::size_t frames, std::size_t n, std::mt19937_64& rng) {
  std::vector<ActorSet> v;
  for (std::size_t t = 0; t < frames; ++t) v.push_back(oracle::random_actors(n, 5, rng));
  return v;
}

}  // namespace

TEST_SUITE("temporal") {
  TEST_CASE("center sampling") {
    CHECK(sample_frames(9, 3, SampleMode::Center, 0) == std::vector<std::size_t>{1, 4, 7});
    CHECK(sample_frames(3, 3, SampleMode::Center, 0) == std::vector<std::size_t>{0, 1, 2});
    CHECK(sample_frames(10, 3, SampleMode::Center, 0) == std::vector<std::size_t>{2, 5, 8});
    CHECK_THROWS_AS(sample_frames(2, 3, SampleMode::Center, 0), SamplingError);
    CHECK_THROWS_AS(sample_frames(5, 0, SampleMode::Random, 0), SamplingError);
  }

  TEST_CASE("random sampling is uniform within segments") {
    std::mt19937_64 rng(50);
    const std::size_t trials = 30000;
    std::map<std::size_t, std::size_t> counts;
    for (std::size_t r = 0; r < trials; ++r) {
      const auto ids = sample_frames(12, 3, SampleMode::Random, rng);
      REQUIRE(ids.size() == 3);
      for (std::size_t s = 0; s < 3; ++s) {
        CHECK(ids[s] >= 4 * s);
        CHECK(ids[s] < 4 * s + 4);
      }
      ++counts[ids[1]];
    }
    // χ² with 3 degrees of freedom; 16.27 is the 0.001 critical value.
    double chi2 = 0;
    const double expect = trials / 4.0;
    for (std::size_t f = 4; f < 8; ++f) chi2 += std::pow(counts[f] - expect, 2) / expect;
    CHECK(chi2 < 16.27);
  }

  TEST_CASE("sampling is reproducible from a seed") {
    CHECK(sample_frames(40, 5, SampleMode::Random, 9) == sample_frames(40, 5, SampleMode::Random, 9));
  }

  TEST_CASE("assembly") {
    std::mt19937_64 rng(51);
    const auto one = random_video(1, 4, rng);
    const ActorSet a1 = assemble_temporal_actorset(one);
    CHECK(a1 == one[0]);

    const auto three = random_video(3, 4, rng);
    const ActorSet a = assemble_temporal_actorset(three);
    CHECK(a.size() == 12);
    CHECK(a.frame_count == 3);
    for (std::size_t r = 0; r < 12; ++r) {
      CHECK(a.frame_index[r] == r / 4);
      CHECK(a.positions[r] == three[r / 4].positions[r % 4]);
      CHECK(a.features(r, 2) == three[r / 4].features(r % 4, 2));
    }
    CHECK_NOTHROW(a.validate());

    const std::size_t ids[] = {2, 0};
    const ActorSet b = assemble_temporal_actorset(three, ids);
    CHECK(b.features(0, 0) == three[2].features(0, 0));
    const std::size_t bad[] = {3};
    CHECK_THROWS_AS(assemble_temporal_actorset(three, bad), SamplingError);

    std::vector<ActorSet> mixed = random_video(2, 3, rng);
    mixed[1].features = Tensor(3, 4);
    CHECK_THROWS_AS(assemble_temporal_actorset(mixed), ShapeError);
  }

  TEST_CASE("sliding window") {
    std::mt19937_64 rng(52);
    const Model m = init_model(tiny_config(3), 1);
    const auto three = random_video(3, 4, rng);
    const PooledScores single = sliding_window_predict(three, 3, 1, m);
    const Tensor direct = softmax_rows(forward(m, assemble_temporal_actorset(three)).group_logits);
    CHECK(max_abs_diff(single.scores, direct) < 1e-15);

    const auto five = random_video(5, 4, rng);
    const PooledScores pooled = sliding_window_predict(five, 3, 1, m);
    REQUIRE(pooled.per_window.size() == 3);
    Tensor mean(1, 4);
    for (std::size_t w = 0; w < 3; ++w) {
      const std::span<const ActorSet> win(five.data() + w, 3);
      const Tensor p = softmax_rows(forward(m, assemble_temporal_actorset(win)).group_logits);
      for (std::size_t c = 0; c < 4; ++c) mean(0, c) += p(0, c) / 3.0;
    }
    CHECK(max_abs_diff(pooled.scores, mean) < 1e-12);
    double s = 0;
    for (double v : pooled.scores.data()) s += v;
    CHECK(std::abs(s - 1.0) < 1e-12);
    CHECK(pooled.prediction == argmax_row(pooled.scores));

    CHECK(sliding_window_predict(five, 3, 2, m).per_window.size() == 2);
    const std::span<const ActorSet> two(five.data(), 2);
    CHECK_THROWS_AS(sliding_window_predict(two, 3, 1, m), InferenceError);
    CHECK_THROWS_AS(sliding_window_predict(five, 3, 0, m), InferenceError);

    const PooledScores logits = sliding_window_predict(five, 3, 1, m, ScorePooling::Logits);
    CHECK(logits.per_window.size() == 3);
  }

  TEST_CASE("TSN") {
    std::mt19937_64 rng(53);
    const Model m = init_model(tiny_config(1), 2);
    const auto one = random_video(1, 4, rng);
    const Tensor direct = softmax_rows(forward(m, one[0]).group_logits);
    CHECK(max_abs_diff(tsn_predict(one, m).scores, direct) < 1e-15);

    const std::vector<ActorSet> same(3, one[0]);
    CHECK(max_abs_diff(tsn_predict(same, m).scores, direct) < 1e-15);
    const std::vector<ActorSet> none;
    CHECK_THROWS_AS(tsn_predict(none, m), InferenceError);
  }

  TEST_CASE("repeated frames give matching relational features") {
    std::mt19937_64 rng(54);
    const Model m = init_model(tiny_config(3), 3);
    const auto one = random_video(1, 4, rng);
    const std::vector<ActorSet> rep(3, one[0]);
    const Prediction p = forward(m, assemble_temporal_actorset(rep));
    for (std::size_t i = 0; i < 4; ++i)
      for (std::size_t c = 0; c < 3; ++c) {
        CHECK(std::abs(p.individual_logits(i, c) - p.individual_logits(i + 4, c)) < 1e-12);
        CHECK(std::abs(p.individual_logits(i, c) - p.individual_logits(i + 8, c)) < 1e-12);
      }
  }

  TEST_CASE("pooling helpers") {
    const PooledScores p = pool_scores({Tensor::from_rows({{0.2, 0.8}}), Tensor::from_rows({{0.6, 0.4}})});
    CHECK(p.scores(0, 0) == doctest::Approx(0.4));
    CHECK(p.prediction == 1);
    const PooledScores tie = pool_scores({Tensor::from_rows({{0.5, 0.5}})});
    CHECK(tie.prediction == 0);
    CHECK_THROWS_AS(pool_scores({}), InferenceError);
    CHECK(parse_pooling("logits") == ScorePooling::Logits);
  }
}
