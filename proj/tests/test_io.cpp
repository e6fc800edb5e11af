#include <doctest.h>

#include <cstdio>

#include <json.hpp>

#include "arg/checkpoint.hpp"
#include "arg/config_json.hpp"
#include "arg/error.hpp"
#include "arg/gradcheck.hpp"

using namespace arg;

namespace {

ModelConfig small_model() {
  ModelConfig c;
  c.relation.key_dim = 4;
  c.relation.encoding_dim = 4;
  c.relation.graph_count = 3;
  c.relation.distance_threshold = 200.0;
  c.relation.appearance = AppearanceRelation::RelationNetwork;
  c.relation.position = PositionRelation::DistanceEncoding;
  c.fusion = Fusion::LateConcat;
  c.feature_dim = 5;
  c.action_classes = 3;
  c.activity_classes = 4;
  return c;
}

}  // namespace

TEST_SUITE("checkpoint") {
  TEST_CASE("round trip") {
    const Model m = init_model(small_model(), 3);
    const std::string bytes = encode_checkpoint(m);
    const Model back = decode_checkpoint(bytes);
    CHECK(back.config == m.config);
    const auto a = parameter_list(m.params), b = parameter_list(back.params);
    REQUIRE(a.size() == b.size());
    for (std::size_t k = 0; k < a.size(); ++k) {
      CHECK(a[k].name == b[k].name);
      CHECK(*a[k].tensor == *b[k].tensor);
    }
    CHECK(encode_checkpoint(back) == bytes);

    save_checkpoint("ckpt_test.bin", m);
    CHECK(encode_checkpoint(load_checkpoint("ckpt_test.bin")) == bytes);
    std::remove("ckpt_test.bin");
  }

  TEST_CASE("malformed checkpoints") {
    const std::string bytes = encode_checkpoint(init_model(small_model(), 3));
    std::string bad = bytes;
    bad[3] = '?';
    CHECK_THROWS_AS(decode_checkpoint(bad), FormatError);
    CHECK_THROWS_AS(decode_checkpoint(bytes.substr(0, bytes.size() - 8)), FormatError);
    CHECK_THROWS_AS(decode_checkpoint(bytes + std::string(2, '\0')), FormatError);
    CHECK_THROWS_AS(decode_checkpoint(""), FormatError);
  }
}

TEST_SUITE("config-json") {
  TEST_CASE("round trip") {
    TrainConfig t;
    t.model = small_model();
    t.epochs = 12;
    t.lr_schedule = {{0, 1e-3}, {8, 1e-4}};
    t.eval.mode = InferenceMode::Sliding;
    t.eval.stride = 2;
    CHECK(train_config_from_json(to_json(t)) == t);
    CHECK(model_config_from_json(to_json(t.model)) == t.model);
    SynthConfig s;
    s.frames = 4;
    s.seed = 99;
    CHECK(synth_config_from_json(to_json(s)) == s);
  }

  TEST_CASE("layering keeps unspecified keys") {
    TrainConfig base;
    base.epochs = 7;
    base.model.relation.graph_count = 4;
    const TrainConfig file = train_config_from_json(R"({"epochs": 9, "fusion": "early"})", base);
    CHECK(file.epochs == 9);
    CHECK(file.model.fusion == Fusion::Early);
    CHECK(file.model.relation.graph_count == 4);
    const TrainConfig flags = train_config_from_json(R"({"epochs": 3})", file);
    CHECK(flags.epochs == 3);
    CHECK(flags.model.fusion == Fusion::Early);
    const TrainConfig unset = train_config_from_json(R"({"distance_threshold": null})", flags);
    CHECK_FALSE(unset.model.relation.distance_threshold.has_value());
  }

  TEST_CASE("bad documents") {
    CHECK_THROWS_AS(train_config_from_json(R"({"epoch": 3})"), ConfigError);
    CHECK_THROWS_AS(train_config_from_json(R"({"epochs": "many"})"), ConfigError);
    CHECK_THROWS_AS(train_config_from_json("{"), ConfigError);
    CHECK_THROWS_AS(train_config_from_json(R"({"fusion": "middle"})"), ConfigError);
    CHECK_THROWS_AS(synth_config_from_json(R"({"activity_classes": 3})").validate(), ConfigError);
  }
}

TEST_SUITE("gradcheck") {
  TEST_CASE("stock build passes") {
    const GradcheckReport r = run_gradcheck();
    CHECK(r.passed());
    CHECK(r.models.size() == 27);
    CHECK(r.ops.size() >= 20);
    for (const auto& row : r.models) CHECK(row.max_rel_error <= r.tolerance);
  }

  TEST_CASE("a flipped backward rule is caught") {
    GradcheckOptions o;
    o.inject_fault = OpKind::RowSoftmax;
    const GradcheckReport r = run_gradcheck(o);
    CHECK_FALSE(r.passed());
    std::size_t failed = 0;
    for (const auto& row : r.models) failed += row.passed ? 0 : 1;
    CHECK(failed > 0);
  }

  TEST_CASE("relative error") {
    CHECK(relative_error(1.0, 1.0, 1e-5) == 0.0);
    CHECK(relative_error(2.0, 1.0, 1e-5) == doctest::Approx(0.5));
    CHECK(relative_error(1e-9, 0.0, 1e-5) == doctest::Approx(1e-4));
  }
}
