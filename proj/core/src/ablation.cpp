#include "arg/ablation.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>

#include "arg/error.hpp"

namespace arg {

std::string_view to_string(AblationStudy s) noexcept {
  switch (s) {
    case AblationStudy::Table1: return "table1";
    case AblationStudy::Graphs: return "graphs";
    case AblationStudy::Fusion: return "fusion";
    case AblationStudy::Temporal: return "temporal";
  }
  return "table1";
}

AblationStudy parse_study(std::string_view s) {
  if (s == "table1") return AblationStudy::Table1;
  if (s == "graphs") return AblationStudy::Graphs;
  if (s == "fusion") return AblationStudy::Fusion;
  if (s == "temporal") return AblationStudy::Temporal;
  throw ConfigError("unknown ablation study '" + std::string(s) + "' (table1, graphs, fusion, temporal)");
}

std::vector<AblationRun> ablation_runs(AblationStudy study, const TrainConfig& base) {
  std::vector<AblationRun> runs;
  switch (study) {
    case AblationStudy::Table1: {
      TrainConfig c = base;
      c.model.variant = ModelVariant::Base;
      runs.push_back({"base", c});
      for (AppearanceRelation a : kAllAppearance) {
        for (PositionRelation p : kAllPosition) {
          c = base;
          c.model.variant = ModelVariant::Arg;
          c.model.relation.appearance = a;
          c.model.relation.position = p;
          runs.push_back({std::string(to_string(a)) + " + " + std::string(to_string(p)), c});
        }
      }
      break;
    }
    case AblationStudy::Graphs:
      for (std::size_t g : {1, 2, 4, 8}) {
        TrainConfig c = base;
        c.model.variant = ModelVariant::Arg;
        c.model.relation.graph_count = g;
        runs.push_back({"N_g = " + std::to_string(g), c});
      }
      break;
    case AblationStudy::Fusion:
      for (Fusion f : kAllFusion) {
        TrainConfig c = base;
        c.model.variant = ModelVariant::Arg;
        c.model.fusion = f;
        runs.push_back({std::string(to_string(f)), c});
      }
      break;
    case AblationStudy::Temporal: {
      TrainConfig c = base;
      c.model.frames = 1;
      c.eval.mode = InferenceMode::Single;
      runs.push_back({"single frame", c});
      c.eval.mode = InferenceMode::Tsn;
      c.eval.tsn_frames = 3;
      runs.push_back({"TSN (3 frames)", c});
      c = base;
      c.model.frames = 3;
      c.eval.mode = InferenceMode::Single;
      runs.push_back({"temporal graph (K = 3)", c});
      break;
    }
  }
  return runs;
}

std::vector<AblationRow> run_ablation(const Dataset& train_data, const Dataset& test,
                                      const std::vector<AblationRun>& runs,
                                      const std::function<void(const AblationRow&)>& on_row) {
  std::vector<AblationRow> rows;
  for (const AblationRun& run : runs) {
    const auto start = std::chrono::steady_clock::now();
    TrainResult r = train(train_data, run.config);
    EvalResult e = evaluate(test, r.model, run.config.eval);
    AblationRow row{run.label, e.group_accuracy, e.individual_accuracy,
                    std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count()};
    if (on_row) on_row(row);
    rows.push_back(row);
  }
  return rows;
}

std::string format_ablation(const std::vector<AblationRow>& rows) {
  std::size_t width = 5;
  for (const auto& r : rows) width = std::max(width, r.label.size());
  std::string out;
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-*s  %9s  %9s  %8s\n", static_cast<int>(width), "model", "group %",
                "action %", "seconds");
  out += buf;
  out += std::string(width + 34, '-') + "\n";
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%-*s  %9.1f  %9.1f  %8.1f\n", static_cast<int>(width), r.label.c_str(),
                  100.0 * r.group_acc, 100.0 * r.indiv_acc, r.seconds);
    out += buf;
  }
  return out;
}

}  // namespace arg
