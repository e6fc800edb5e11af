#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "arg/gcn.hpp"
#include "arg/relation.hpp"
#include "arg/tape.hpp"

namespace arg {

struct GradcheckOptions {
  double step = 1e-6;       // central difference half-width
  double tolerance = 1e-4;  // max accepted relative error
  /// Denominator floor: errors are |a − n| / max(|a|, |n|, floor), so
  /// gradients near zero are compared absolutely.
  double floor = 1e-5;
  std::uint64_t seed = 11;
  std::size_t actors = 4;
  std::size_t feature_dim = 8;
  std::size_t graph_count = 2;
  std::size_t key_dim = 4;
  std::size_t encoding_dim = 4;
  /// Negate this op's backward rule in the analytic pass.
  std::optional<OpKind> inject_fault;
};

struct GradcheckRow {
  std::string name;
  double max_rel_error = 0.0;
  std::size_t entries = 0;  // gradient entries compared
  bool passed = false;
};

struct GradcheckReport {
  std::vector<GradcheckRow> ops;     // one row per differentiable op
  std::vector<GradcheckRow> models;  // appearance × position × fusion
  double tolerance = 0.0;

  bool passed() const;
};

double relative_error(double analytic, double numeric, double floor);

/// Gradient of sum(op(x) ⊙ R) for a random R, per op.
std::vector<GradcheckRow> check_ops(const GradcheckOptions& options);
/// End-to-end joint loss gradient for one model configuration.
GradcheckRow check_model(AppearanceRelation appearance, PositionRelation position, Fusion fusion,
                         const GradcheckOptions& options);
GradcheckReport run_gradcheck(const GradcheckOptions& options = {});

}  // namespace arg
