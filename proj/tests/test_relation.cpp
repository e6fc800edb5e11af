#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include <json.hpp>

#include "arg/error.hpp"
#include "arg/graph_export.hpp"
#include "arg/relation.hpp"
#include "oracles.hpp"

using namespace arg;

namespace {

RelationConfig config_for(AppearanceRelation a, PositionRelation p, std::size_t graphs = 2) {
  RelationConfig c;
  c.appearance = a;
  c.position = p;
  c.key_dim = 6;
  c.encoding_dim = 8;
  c.graph_count = graphs;
  return c;
}

std::vector<RelationParams> init_all(const RelationConfig& c, std::size_t d, std::mt19937_64& rng) {
  std::vector<RelationParams> out;
  for (std::size_t g = 0; g < c.graph_count; ++g) out.push_back(init_relation_params(c, d, rng));
  return out;
}

}  // namespace

TEST_SUITE("relation-graph") {
  TEST_CASE("dot product examples") {
    const Tensor x = Tensor::from_rows({{1, 0, 1, 0}, {1, 1, 0, 0}});
    CHECK(appearance_dot_product(x)(0, 1) == doctest::Approx(0.5));
    const Tensor z = Tensor::from_rows({{0, 0, 0}, {1, 2, 3}});
    const Tensor f = appearance_dot_product(z);
    CHECK(f(0, 0) == 0.0);
    CHECK(f(0, 1) == 0.0);
    CHECK(f(1, 0) == 0.0);
  }

  TEST_CASE("appearance relations match double-loop oracles") {
    std::mt19937_64 rng(10);
    for (AppearanceRelation a : kAllAppearance) {
      const RelationConfig c = config_for(a, PositionRelation::None, 1);
      const Tensor x = oracle::random_tensor(6, 16, rng);
      const RelationParams p = init_relation_params(c, 16, rng);
      Tensor got;
      if (a == AppearanceRelation::DotProduct) got = appearance_dot_product(x);
      if (a == AppearanceRelation::EmbeddedDotProduct) got = appearance_embedded_dot(x, p);
      if (a == AppearanceRelation::RelationNetwork) got = appearance_relation_network(x, p);
      CHECK(oracle::max_abs_diff(got, oracle::appearance(c, x, p)) < 1e-12);
    }
  }

  TEST_CASE("embedded dot product reduces to dot product") {
    const std::size_t d = 5;
    RelationParams p;
    p.theta_w = Tensor::identity(d);
    p.phi_w = Tensor::identity(d);
    p.theta_b = Tensor(1, d);
    p.phi_b = Tensor(1, d);
    std::mt19937_64 rng(11);
    const Tensor x = oracle::random_tensor(4, d, rng);
    CHECK(max_abs_diff(appearance_embedded_dot(x, p), appearance_dot_product(x)) < 1e-15);
    CHECK(appearance_embedded_dot(Tensor(4, d), p) == Tensor(4, 4));
  }

  TEST_CASE("embedded dot product rejects inconsistent shapes") {
    RelationParams p;
    p.theta_w = Tensor(3, 4);
    p.phi_w = Tensor(2, 4);
    p.theta_b = Tensor(1, 3);
    p.phi_b = Tensor(1, 2);
    CHECK_THROWS_AS(appearance_embedded_dot(Tensor(2, 4), p), ShapeError);
  }

  TEST_CASE("relation network clamps and saturates") {
    std::mt19937_64 rng(12);
    const RelationConfig c = config_for(AppearanceRelation::RelationNetwork, PositionRelation::None, 1);
    RelationParams p = init_relation_params(c, 4, rng);
    p.rn_w = Tensor(1, 2 * c.key_dim);
    p.rn_b = Tensor::scalar(-1.0);
    const Tensor x = oracle::random_tensor(3, 4, rng);
    CHECK(appearance_relation_network(x, p) == Tensor(3, 3));
    p.rn_b = Tensor::scalar(2.0);
    CHECK(appearance_relation_network(x, p) == Tensor(3, 3, 2.0));
  }

  TEST_CASE("distance mask examples") {
    const Point pts[] = {{0, 0}, {0, 3}};
    CHECK(position_distance_mask(pts, 2.0) == Tensor::identity(2));
    CHECK(position_distance_mask(pts, 1e9) == Tensor::ones(2, 2));
    CHECK_THROWS_AS(position_distance_mask(pts, 0.0), PreconditionError);

    std::mt19937_64 rng(13);
    const ActorSet a = oracle::random_actors(10, 2, rng);
    const Tensor m = position_distance_mask(a.positions, 1280.0 / 5.0);
    for (std::size_t i = 0; i < 10; ++i)
      for (std::size_t j = 0; j < 10; ++j)
        CHECK(m(i, j) == (oracle::euclid(a.positions[i], a.positions[j]) <= 256.0 ? 1.0 : 0.0));
  }

  TEST_CASE("distance encoding") {
    const auto e = encode_distance(0.0, 4);
    CHECK(e == std::vector<double>{0, 1, 0, 1});
    CHECK_THROWS_AS(encode_distance(1.0, 3), ConfigError);
    std::mt19937_64 rng(14);
    std::uniform_real_distribution<double> u(0, 1500);
    for (int rep = 0; rep < 20; ++rep) {
      const double d = u(rng);
      const auto got = encode_distance(d, 32);
      for (std::size_t k = 0; k < 16; ++k) {
        const double w = std::pow(1000.0, 2.0 * static_cast<double>(k) / 32.0);
        CHECK(std::abs(got[2 * k] - std::sin(d / w)) < 1e-12);
        CHECK(std::abs(got[2 * k + 1] - std::cos(d / w)) < 1e-12);
      }
    }
  }

  TEST_CASE("zero encoding weights with unit bias reduce to no position term") {
    std::mt19937_64 rng(15);
    const ActorSet a = oracle::random_actors(5, 6, rng);
    RelationConfig enc = config_for(AppearanceRelation::EmbeddedDotProduct, PositionRelation::DistanceEncoding, 1);
    RelationParams p = init_relation_params(enc, 6, rng);
    p.pos_w = Tensor(1, enc.encoding_dim);
    p.pos_b = Tensor::scalar(1.0);
    RelationConfig none = enc;
    none.position = PositionRelation::None;
    const RelationParams ps[] = {p};
    CHECK(max_abs_diff(build_graph_group(a, enc, ps).graphs[0], build_graph_group(a, none, ps).graphs[0]) < 1e-15);
  }

  TEST_CASE("a row with zero position mass is reported") {
    std::mt19937_64 rng(16);
    const ActorSet a = oracle::random_actors(3, 4, rng);
    RelationConfig c = config_for(AppearanceRelation::DotProduct, PositionRelation::DistanceEncoding, 1);
    RelationParams p = init_relation_params(c, 4, rng);
    p.pos_w = Tensor(1, c.encoding_dim);
    p.pos_b = Tensor::scalar(-1.0);
    const RelationParams ps[] = {p};
    CHECK_THROWS_AS(build_graph_group(a, c, ps), DegenerateRowError);
  }

  TEST_CASE("single actor and identical actors") {
    std::mt19937_64 rng(17);
    for (AppearanceRelation ap : kAllAppearance) {
      for (PositionRelation po : kAllPosition) {
        const RelationConfig c = config_for(ap, po, 1);
        const auto ps = init_all(c, 3, rng);
        const ActorSet one = oracle::random_actors(1, 3, rng);
        CHECK(build_graph_group(one, c, ps).graphs[0] == Tensor::ones(1, 1));
      }
    }
    ActorSet same = oracle::random_actors(4, 3, rng);
    for (std::size_t i = 1; i < 4; ++i)
      for (std::size_t c = 0; c < 3; ++c) same.features(i, c) = same.features(0, c);
    const RelationConfig c = config_for(AppearanceRelation::EmbeddedDotProduct, PositionRelation::None, 1);
    const auto ps = init_all(c, 3, rng);
    CHECK(max_abs_diff(build_graph_group(same, c, ps).graphs[0], Tensor(4, 4, 0.25)) < 1e-15);
  }

  TEST_CASE("graph group matches the scalar reimplementation") {
    std::mt19937_64 rng(18);
    for (AppearanceRelation ap : kAllAppearance) {
      for (PositionRelation po : kAllPosition) {
        const RelationConfig c = config_for(ap, po, 2);
        const auto ps = init_all(c, 7, rng);
        const ActorSet a = oracle::random_actors(5, 7, rng);
        const RelationGraphGroup g = build_graph_group(a, c, ps);
        REQUIRE(g.graphs.size() == 2);
        for (std::size_t k = 0; k < 2; ++k) CHECK(oracle::max_abs_diff(g.graphs[k], oracle::graph(c, a, ps[k])) < 1e-9);
      }
    }
  }

  TEST_CASE("row stochastic, local and permutation equivariant") {
    std::mt19937_64 rng(19);
    for (int rep = 0; rep < 30; ++rep) {
      const RelationConfig c = config_for(kAllAppearance[rep % 3], kAllPosition[(rep / 3) % 3], 2);
      const auto ps = init_all(c, 5, rng);
      const ActorSet a = oracle::random_actors(6, 5, rng);
      const RelationGraphGroup g = build_graph_group(a, c, ps);
      std::vector<std::size_t> perm(6);
      std::iota(perm.begin(), perm.end(), 0);
      std::shuffle(perm.begin(), perm.end(), rng);
      const RelationGraphGroup gp = build_graph_group(permute_actors(a, perm), c, ps);
      for (std::size_t k = 0; k < g.graphs.size(); ++k) {
        for (std::size_t i = 0; i < 6; ++i) {
          double s = 0;
          for (std::size_t j = 0; j < 6; ++j) {
            s += g.graphs[k](i, j);
            if (g.mask(i, j) == 0.0) CHECK(g.graphs[k](i, j) == 0.0);
            CHECK(std::abs(gp.graphs[k](i, j) - g.graphs[k](perm[i], perm[j])) < 1e-12);
          }
          CHECK(std::abs(s - 1.0) < 1e-9);
          CHECK(g.mask(i, i) == 1.0);
        }
      }
    }
  }

  TEST_CASE("dot product logits scale with the square of the features") {
    std::mt19937_64 rng(20);
    const Tensor x = oracle::random_tensor(4, 6, rng);
    Tensor x3 = x;
    for (double& v : x3.data()) v *= 3.0;
    const Tensor a = appearance_dot_product(x), b = appearance_dot_product(x3);
    for (std::size_t k = 0; k < a.size(); ++k) CHECK(b[k] == doctest::Approx(9.0 * a[k]));
  }

  TEST_CASE("identical weights give identical graphs") {
    std::mt19937_64 rng(21);
    const RelationConfig c = config_for(AppearanceRelation::RelationNetwork, PositionRelation::DistanceEncoding, 3);
    const RelationParams p = init_relation_params(c, 4, rng);
    const std::vector<RelationParams> ps(3, p);
    const ActorSet a = oracle::random_actors(5, 4, rng);
    const RelationGraphGroup g = build_graph_group(a, c, ps);
    CHECK(g.graphs[0] == g.graphs[1]);
    CHECK(g.graphs[1] == g.graphs[2]);
  }

  TEST_CASE("config validation") {
    RelationConfig c;
    c.encoding_dim = 7;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = {};
    c.graph_count = 0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = {};
    c.distance_threshold = -1.0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    CHECK(parse_appearance("relation-network") == AppearanceRelation::RelationNetwork);
    CHECK(parse_position("distance-encoding") == PositionRelation::DistanceEncoding);
    CHECK_THROWS_AS(parse_position("near"), ConfigError);
  }

  TEST_CASE("actor set validation") {
    ActorSet a;
    CHECK_THROWS_AS(a.validate(), PreconditionError);
    std::mt19937_64 rng(22);
    a = oracle::random_actors(3, 2, rng);
    a.frame_index[2] = 1;
    CHECK_THROWS_AS(a.validate(), PreconditionError);
    a.frame_index[2] = 0;
    a.positions.pop_back();
    CHECK_THROWS_AS(a.validate(), ShapeError);
  }
}

TEST_SUITE("graph-export") {
  TEST_CASE("uniform graph ties go to the lowest index") {
    RelationGraphGroup g;
    g.graphs = {Tensor(4, 4, 0.25)};
    g.mask = Tensor::ones(4, 4);
    const auto sums = column_sums(g);
    for (double s : sums) CHECK(s == 1.0);
    CHECK(key_actor(g) == 0);
  }

  TEST_CASE("key actor is the largest column sum over the group") {
    RelationGraphGroup g;
    g.graphs = {Tensor::from_rows({{0.5, 0.5, 0}, {0, 0.2, 0.8}, {0, 0.1, 0.9}}),
                Tensor::from_rows({{0.1, 0.9, 0}, {0, 1, 0}, {0, 1, 0}})};
    g.mask = Tensor::ones(3, 3);
    CHECK(key_actor(g) == 1);
    CHECK(key_actor(g.graphs[0]) == 2);
  }

  TEST_CASE("JSON and DOT agree on the edge set") {
    std::mt19937_64 rng(23);
    const RelationConfig c = config_for(AppearanceRelation::EmbeddedDotProduct, PositionRelation::DistanceMask, 2);
    const auto ps = init_all(c, 4, rng);
    const ActorSet a = oracle::random_actors(6, 4, rng, 600, 400);
    const RelationGraphGroup g = build_graph_group(a, c, ps);
    const auto j = nlohmann::json::parse(graph_group_to_json(g));
    CHECK(j["n"] == 6);
    const std::string dot = graph_group_to_dot(g, 1e-3);
    std::size_t json_edges = 0;
    for (std::size_t k = 0; k < 2; ++k) {
      for (std::size_t i = 0; i < 6; ++i) {
        double s = 0;
        for (std::size_t jj = 0; jj < 6; ++jj) {
          const double v = j["graphs"][k][i][jj].get<double>();
          s += v;
          if (v >= 1e-3) ++json_edges;
        }
        CHECK(std::abs(s - 1.0) < 1e-9);
      }
    }
    std::size_t dot_edges = 0;
    for (std::size_t pos = dot.find("->"); pos != std::string::npos; pos = dot.find("->", pos + 2)) ++dot_edges;
    CHECK(dot_edges == json_edges);
    CHECK(j["key_actor"] == key_actor(g));
  }
}
