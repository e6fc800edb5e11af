// End-to-end acceptance run. Prints one [PASS]/[FAIL] line per criterion and
// exits non-zero if any fails.
//
//   acceptance <path to arg executable> <scratch directory>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "arg/dataset.hpp"
#include "arg/error.hpp"
#include "arg/gradcheck.hpp"
#include "arg/graph_export.hpp"
#include "arg/model.hpp"
#include "arg/temporal.hpp"
#include "arg/trainer.hpp"
#include "oracles.hpp"

namespace fs = std::filesystem;
using namespace arg;

namespace {

int failures = 0;

void report(int n, bool ok, const std::string& what, const std::string& detail) {
  std::printf("[%s] criterion %d: %s (%s)\n", ok ? "PASS" : "FAIL", n, what.c_str(), detail.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

void note(const std::string& s) {
  std::printf("    %s\n", s.c_str());
  std::fflush(stdout);
}

std::string fmt(const char* f, double a, double b = 0, double c = 0, double d = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c, d);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t).count();
}

// 1 ---------------------------------------------------------------------------

void gradient_suite() {
  const auto t0 = std::chrono::steady_clock::now();
  const GradcheckReport r = run_gradcheck();
  const double secs = seconds_since(t0);
  double worst = 0;
  std::size_t passed = 0;
  for (const auto& row : r.models) {
    worst = std::max(worst, row.max_rel_error);
    passed += row.max_rel_error < 1e-4 ? 1 : 0;
  }
  report(1, r.models.size() == 27 && passed == 27 && r.passed() && secs < 120.0,
         "gradients of all 27 variants match central differences",
         fmt("%.0f/27 variants, max relative error %.2e, %.1f s", static_cast<double>(passed), worst, secs));
}

// 2 ---------------------------------------------------------------------------

void graph_invariants() {
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<std::size_t> pick_n(1, 12), pick_d(2, 10), pick_v(0, 2);
  std::uniform_real_distribution<double> pick_mu(40.0, 600.0);
  double worst_row = 0, worst_perm = 0;
  std::size_t mask_violations = 0, checked = 0, degenerate = 0;
  for (int trial = 0; checked < 1000; ++trial) {
    RelationConfig c;
    c.appearance = kAllAppearance[pick_v(rng)];
    c.position = kAllPosition[pick_v(rng)];
    c.key_dim = 6;
    c.encoding_dim = 8;
    c.graph_count = 2;
    if (trial % 2) c.distance_threshold = pick_mu(rng);
    const std::size_t n = pick_n(rng), d = pick_d(rng);
    const ActorSet a = oracle::random_actors(n, d, rng, 1280, 720);
    std::vector<RelationParams> ps;
    for (std::size_t g = 0; g < c.graph_count; ++g) ps.push_back(init_relation_params(c, d, rng));
    RelationGraphGroup g;
    try {
      g = build_graph_group(a, c, ps);
    } catch (const DegenerateRowError&) {
      ++degenerate;  // a learned position score zeroed a whole row
      continue;
    }
    ++checked;
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    const RelationGraphGroup gp = build_graph_group(permute_actors(a, perm), c, ps);
    const double mu = c.threshold_for(a);
    for (std::size_t k = 0; k < g.graphs.size(); ++k) {
      for (std::size_t i = 0; i < n; ++i) {
        double s = 0;
        for (std::size_t j = 0; j < n; ++j) {
          const double v = g.graphs[k](i, j);
          s += v;
          if (c.position == PositionRelation::DistanceMask) {
            const bool far = oracle::euclid(a.positions[i], a.positions[j]) > mu;
            if (far != (v == 0.0)) ++mask_violations;
          }
          worst_perm = std::max(worst_perm, std::abs(gp.graphs[k](i, j) - g.graphs[k](perm[i], perm[j])));
        }
        worst_row = std::max(worst_row, std::abs(s - 1.0));
      }
    }
  }
  report(2, worst_row <= 1e-9 && mask_violations == 0 && worst_perm <= 1e-12,
         "graph invariants on 1000 random actor sets",
         fmt("max |row sum - 1| %.1e, %.0f mask violations, max permutation error %.1e", worst_row,
             static_cast<double>(mask_violations), worst_perm) +
             fmt(", %.0f degenerate draws skipped", static_cast<double>(degenerate)));
}

// 3 ---------------------------------------------------------------------------

void oracle_equivalence() {
  std::mt19937_64 rng(33);
  double rel = 0, layer = 0, fused = 0, loss = 0, model = 0;
  for (int t = 0; t < 20; ++t) {
    for (AppearanceRelation ap : kAllAppearance) {
      for (PositionRelation po : kAllPosition) {
        RelationConfig c;
        c.appearance = ap;
        c.position = po;
        c.key_dim = 5;
        c.encoding_dim = 6;
        c.graph_count = 1;
        const ActorSet a = oracle::random_actors(6, 7, rng, 800, 500);
        const RelationParams p = init_relation_params(c, 7, rng);
        const RelationParams ps[] = {p};
        try {
          rel = std::max(rel, oracle::max_abs_diff(build_graph_group(a, c, ps).graphs[0], oracle::graph(c, a, p)));
        } catch (const DegenerateRowError&) {
        }
      }
    }
    const Tensor g = oracle::random_tensor(6, 6, rng, 0.0, 1.0);
    const Tensor z = oracle::random_tensor(6, 5, rng);
    const Tensor w = oracle::random_tensor(5, 5, rng);
    layer = std::max(layer, oracle::max_abs_diff(gcn_layer(g, z, w), oracle::gcn_layer(g, z, w)));
    for (Fusion f : kAllFusion) {
      const GcnParams gp = init_gcn_params(f, 3, 5, rng);
      std::vector<Tensor> graphs;
      for (int k = 0; k < 3; ++k) graphs.push_back(oracle::random_tensor(6, 6, rng, 0.0, 0.5));
      fused = std::max(fused, oracle::max_abs_diff(fuse(f, graphs, z, gp), oracle::fuse(f, graphs, z, gp)));
    }
    const Prediction pred{oracle::random_tensor(1, 4, rng, -4, 4), oracle::random_tensor(6, 3, rng, -4, 4)};
    std::vector<std::size_t> labels(6);
    for (auto& y : labels) y = rng() % 3;
    const double lam = static_cast<double>(t) / 10.0;
    loss = std::max(loss, std::abs(joint_loss(pred, t % 4, labels, lam) -
                                   oracle::joint_loss(pred.group_logits, pred.individual_logits, t % 4, labels, lam)));
    ModelConfig mc;
    mc.relation.key_dim = 5;
    mc.relation.encoding_dim = 6;
    mc.relation.graph_count = 2;
    mc.relation.appearance = kAllAppearance[t % 3];
    mc.relation.position = kAllPosition[(t / 3) % 3];
    mc.fusion = kAllFusion[t % 3];
    mc.feature_dim = 7;
    mc.action_classes = 3;
    mc.activity_classes = 4;
    mc.frames = 1;
    const Model m = init_model(mc, static_cast<std::uint64_t>(t));
    const ActorSet a = oracle::random_actors(6, 7, rng, 800, 500);
    try {
      const Prediction got = forward(m, a);
      const oracle::Outputs want = oracle::forward(m, a);
      model = std::max({model, oracle::max_abs_diff(got.group_logits, want.group),
                        oracle::max_abs_diff(got.individual_logits, want.individual)});
    } catch (const DegenerateRowError&) {
    }
  }
  const double worst = std::max({rel, layer, fused, loss, model});
  report(3, worst <= 1e-9, "engine matches scalar loop reimplementations on 20 instances each",
         fmt("relation %.1e, gcn %.1e, fusion %.1e, loss %.1e", rel, layer, fused, loss) +
             fmt(", full forward %.1e", model));
}

// 4, 5, 7 ---------------------------------------------------------------------

TrainConfig desk_config(std::size_t graphs, std::size_t frames) {
  TrainConfig c;
  c.model.relation.key_dim = 32;
  c.model.relation.graph_count = graphs;
  c.model.frames = frames;
  c.epochs = 60;
  c.eval_every = 0;
  c.seed = 1;
  return c;
}

struct Trained {
  Model model;
  double acc = 0;
  double secs = 0;
};

Trained fit(const Dataset& train_set, const Dataset& test_set, const TrainConfig& c) {
  const auto t0 = std::chrono::steady_clock::now();
  TrainResult r = train(train_set, c);
  const double acc = evaluate(test_set, r.model, c.eval).group_accuracy;
  return {std::move(r.model), acc, seconds_since(t0)};
}

void key_actor_check(const Model& model, const Dataset& test_set) {
  double hits = 0, chance = 0;
  std::size_t used = 0;
  for (const SceneSample& s : test_set.samples) {
    const std::size_t n = s.actor_count();
    const auto ids = sample_frames(s.frames.size(), model.config.frames, SampleMode::Center, 0);
    const ActorSet a = assemble_temporal_actorset(s.frames, ids);
    const std::size_t key = key_actor(build_graph_group(a, model.config.relation, model.params.relations)) % n;
    hits += (static_cast<int>(key) == s.key_actors[0] || static_cast<int>(key) == s.key_actors[1]) ? 1 : 0;
    chance += 2.0 / static_cast<double>(n);
    ++used;
  }
  const double rate = hits / static_cast<double>(used), base = chance / static_cast<double>(used);
  report(7, used >= 100 && rate > 2.0 * base, "max column sum finds a designated key actor",
         fmt("hit rate %.3f over %.0f test samples, chance %.3f, ratio %.2f", rate, static_cast<double>(used), base,
             rate / base));
}

struct Experiment {
  Model model;
  Dataset test_set;
};

Experiment experiments() {
  SynthConfig synth;  // seed 7
  const Dataset train_set = make_dataset(synth, 2000, 0);
  const Dataset test_set = make_dataset(synth, 500, 2000);

  TrainConfig base_cfg = desk_config(4, 3);
  base_cfg.model.variant = ModelVariant::Base;
  const Trained base = fit(train_set, test_set, base_cfg);
  note(fmt("base model: test group accuracy %.1f%% (%.0f s)", 100 * base.acc, base.secs));
  note(std::string("linear classifier on max-pooled raw features stays below 70%: ") +
       (base.acc < 0.70 ? "yes" : "no"));

  const Trained full = fit(train_set, test_set, desk_config(4, 3));
  note(fmt("ARG (N_g = 4, K = 3): test group accuracy %.1f%% (%.0f s)", 100 * full.acc, full.secs));
  const double gain = 100 * (full.acc - base.acc);
  report(4, gain >= 15.0 && full.acc >= 0.90 && base.acc < 0.70,
         "relational gain over the base model on 2000/500 videos",
         fmt("ARG %.1f%%, base %.1f%%, gain %.1f points", 100 * full.acc, 100 * base.acc, gain));

  const Trained one_graph = fit(train_set, test_set, desk_config(1, 3));
  note(fmt("ARG (N_g = 1, K = 3): %.1f%% (%.0f s)", 100 * one_graph.acc, one_graph.secs));
  const Trained one_frame = fit(train_set, test_set, desk_config(4, 1));
  note(fmt("ARG (N_g = 4, K = 1): %.1f%% (%.0f s)", 100 * one_frame.acc, one_frame.secs));
  const double graph_gap = 100 * (full.acc - one_graph.acc);
  const double frame_gap = 100 * (full.acc - one_frame.acc);
  report(5, graph_gap >= -1.0 && frame_gap >= -1.0, "ablation ordering",
         fmt("N_g 4 minus N_g 1: %+.1f points; K 3 minus K 1: %+.1f points", graph_gap, frame_gap));

  return {full.model, test_set};
}

// 6 ---------------------------------------------------------------------------

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void determinism(const std::string& exe, const fs::path& dir) {
  const std::string q = "\"";
  const std::string data = (dir / "det.bin").string();
  const std::string common = " train --data " + q + data + q +
                             " --epochs 3 --key-dim 16 --graphs 2 --seed 5 --threads 1 --metrics " + q +
                             (dir / "det.jsonl").string() + q + " --out ";
  int rc = std::system((q + exe + q + " gen-data --videos 60 --frames 4 --out " + q + data + q).c_str());
  rc |= std::system((q + exe + q + common + q + (dir / "a.ckpt").string() + q).c_str());
  rc |= std::system((q + exe + q + common + q + (dir / "b.ckpt").string() + q).c_str());
  const std::string a = slurp(dir / "a.ckpt"), b = slurp(dir / "b.ckpt");
  report(6, rc == 0 && !a.empty() && a == b, "two identical train runs write identical checkpoints",
         fmt("%.0f bytes each, ", static_cast<double>(a.size())) + (a == b ? "identical" : "different"));
}

// 8 ---------------------------------------------------------------------------

void overfit_one() {
  SynthConfig synth;
  const Dataset one = make_dataset(synth, 1, 42);
  TrainConfig c = desk_config(4, 3);
  c.epochs = 500;
  c.batch_size = 1;
  c.lr_schedule = {{0, 1e-2}};
  std::size_t reached = 0;
  double final_loss = 0;
  train(one, c, nullptr, [&](const EpochMetrics& m) {
    if (reached == 0 && m.loss < 0.01) reached = m.epoch;
    final_loss = m.loss;
  });
  report(8, reached > 0, "one sample is memorized within 500 epochs",
         reached > 0 ? fmt("loss below 0.01 at epoch %.0f, final %.1e", static_cast<double>(reached), final_loss)
                     : fmt("final loss %.3f", final_loss));
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 3) {
    std::fprintf(stderr, "usage: acceptance <arg executable> <scratch dir>\n");
    return 2;
  }
  const fs::path dir = argv[2];
  fs::create_directories(dir);
  const auto t0 = std::chrono::steady_clock::now();

  gradient_suite();
  graph_invariants();
  oracle_equivalence();
  const Experiment e = experiments();
  determinism(argv[1], dir);
  key_actor_check(e.model, e.test_set);
  overfit_one();

  std::printf("%d of 8 criteria failed, %.0f s total\n", failures, seconds_since(t0));
  return failures == 0 ? 0 : 1;
}
