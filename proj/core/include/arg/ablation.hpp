#pragma once

#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "arg/dataset.hpp"
#include "arg/trainer.hpp"

namespace arg {

enum class AblationStudy {
  Table1,    // base model, then appearance × position
  Graphs,    // N_g ∈ {1, 2, 4, 8}
  Fusion,    // early, late-sum, late-concat
  Temporal,  // one frame, TSN over three frames, three-frame temporal graph
};

std::string_view to_string(AblationStudy s) noexcept;
AblationStudy parse_study(std::string_view s);

struct AblationRun {
  std::string label;
  TrainConfig config;
};

struct AblationRow {
  std::string label;
  double group_acc = 0.0;
  double indiv_acc = 0.0;
  double seconds = 0.0;
};

/// Variations of `base`, one per table row.
std::vector<AblationRun> ablation_runs(AblationStudy study, const TrainConfig& base);

/// Trains each run on `train` and evaluates on `test` with the run's eval options.
std::vector<AblationRow> run_ablation(const Dataset& train, const Dataset& test,
                                      const std::vector<AblationRun>& runs,
                                      const std::function<void(const AblationRow&)>& on_row = {});

/// Fixed-width text table.
std::string format_ablation(const std::vector<AblationRow>& rows);

}  // namespace arg
