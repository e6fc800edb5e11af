#include "arg/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>

#include "arg/model.hpp"

namespace arg {

namespace {

Tensor random_tensor(std::size_t rows, std::size_t cols, std::mt19937_64& rng, double lo = -1.0,
                     double hi = 1.0) {
  std::uniform_real_distribution<double> dist(lo, hi);
  Tensor t(rows, cols);
  for (double& v : t.data()) v = dist(rng);
  return t;
}

struct OpCase {
  std::string name;
  std::vector<Tensor> inputs;
  std::vector<bool> differentiable;
  std::function<Var(std::span<const Var>)> build;
};

double weighted_sum(Tape& tape, Var out, const Tensor& weights) {
  return sum_all(mul(out, tape.constant(weights))).value().item();
}

GradcheckRow check_case(const OpCase& c, const GradcheckOptions& o, std::mt19937_64& rng) {
  TapeOptions topts;
  topts.flip_backward = o.inject_fault;
  Tape tape(topts);
  std::vector<Var> vars;
  for (std::size_t i = 0; i < c.inputs.size(); ++i)
    vars.push_back(c.differentiable[i] ? tape.variable(c.inputs[i]) : tape.constant(c.inputs[i]));
  Var out = c.build(vars);
  const Tensor weights = random_tensor(out.rows(), out.cols(), rng);
  Var loss = sum_all(mul(out, tape.constant(weights)));
  tape.backward(loss);

  GradcheckRow row{c.name, 0.0, 0, true};
  auto eval = [&](const std::vector<Tensor>& inputs) {
    Tape t;
    std::vector<Var> vs;
    for (const Tensor& x : inputs) vs.push_back(t.constant(x));
    return weighted_sum(t, c.build(vs), weights);
  };
  std::vector<Tensor> inputs = c.inputs;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    if (!c.differentiable[i]) continue;
    const Tensor analytic = tape.grad(vars[i]);
    auto data = inputs[i].data();
    for (std::size_t k = 0; k < data.size(); ++k) {
      const double saved = data[k];
      data[k] = saved + o.step;
      const double up = eval(inputs);
      data[k] = saved - o.step;
      const double down = eval(inputs);
      data[k] = saved;
      const double numeric = (up - down) / (2.0 * o.step);
      row.max_rel_error = std::max(row.max_rel_error, relative_error(analytic.data()[k], numeric, o.floor));
      ++row.entries;
    }
  }
  row.passed = row.max_rel_error < o.tolerance;
  return row;
}

// Values kept away from ReLU kinks and max ties so central differences are smooth.
Tensor away_from_zero(std::size_t rows, std::size_t cols, std::mt19937_64& rng) {
  Tensor t = random_tensor(rows, cols, rng, 0.1, 1.0);
  std::bernoulli_distribution sign(0.5);
  for (double& v : t.data())
    if (sign(rng)) v = -v;
  return t;
}

Tensor distinct_columns(std::size_t rows, std::size_t cols, std::mt19937_64& rng) {
  Tensor t(rows, cols);
  std::vector<std::size_t> order(rows);
  for (std::size_t c = 0; c < cols; ++c) {
    for (std::size_t r = 0; r < rows; ++r) order[r] = r;
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t r = 0; r < rows; ++r) t(order[r], c) = 0.3 * static_cast<double>(r) + 0.05 * static_cast<double>(c);
  }
  return t;
}

std::vector<OpCase> op_cases(std::mt19937_64& rng) {
  std::vector<OpCase> cases;
  auto r = [&](std::size_t a, std::size_t b) { return random_tensor(a, b, rng); };
  cases.push_back({"matmul", {r(3, 4), r(4, 2)}, {true, true}, [](auto v) { return matmul(v[0], v[1]); }});
  cases.push_back({"add", {r(3, 2), r(3, 2)}, {true, true}, [](auto v) { return add(v[0], v[1]); }});
  cases.push_back({"sub", {r(3, 2), r(3, 2)}, {true, true}, [](auto v) { return sub(v[0], v[1]); }});
  cases.push_back({"scale", {r(3, 2)}, {true}, [](auto v) { return scale(v[0], -1.7); }});
  cases.push_back({"mul", {r(3, 2), r(3, 2)}, {true, true}, [](auto v) { return mul(v[0], v[1]); }});
  cases.push_back({"add_row_bias", {r(3, 2), r(1, 2)}, {true, true}, [](auto v) { return add_row_bias(v[0], v[1]); }});
  cases.push_back({"add_scalar", {r(3, 2), r(1, 1)}, {true, true}, [](auto v) { return add_scalar(v[0], v[1]); }});
  cases.push_back({"concat_cols", {r(3, 2), r(3, 1), r(3, 3)}, {true, true, true},
                   [](auto v) { return concat_cols(v); }});
  cases.push_back({"slice_cols", {r(3, 5)}, {true}, [](auto v) { return slice_cols(v[0], 1, 3); }});
  cases.push_back({"transpose", {r(3, 2)}, {true}, [](auto v) { return transpose(v[0]); }});
  cases.push_back({"reshape", {r(4, 3)}, {true}, [](auto v) { return reshape(v[0], 2, 6); }});
  cases.push_back({"col_max", {distinct_columns(4, 3, rng)}, {true}, [](auto v) { return col_max(v[0]); }});
  cases.push_back({"row_sum", {r(3, 4)}, {true}, [](auto v) { return row_sum(v[0]); }});
  cases.push_back({"sum_all", {r(3, 4)}, {true}, [](auto v) { return sum_all(v[0]); }});
  cases.push_back({"log", {random_tensor(3, 2, rng, 0.5, 2.0)}, {true}, [](auto v) { return log(v[0]); }});
  cases.push_back({"exp", {r(3, 2)}, {true}, [](auto v) { return exp(v[0]); }});
  cases.push_back({"relu", {away_from_zero(3, 4, rng)}, {true}, [](auto v) { return relu(v[0]); }});
  {
    Tensor w = random_tensor(4, 4, rng, 0.2, 1.5);
    cases.push_back({"row_softmax", {r(4, 4), w}, {true, true},
                     [](auto v) { return weighted_row_softmax(v[0], v[1]); }});
  }
  {
    Tensor mask(4, 4, 1.0);
    mask(0, 2) = 0.0;
    mask(3, 1) = 0.0;
    cases.push_back({"row_softmax (mask)", {r(4, 4), mask}, {true, false},
                     [](auto v) { return masked_row_softmax(v[0], v[1]); }});
  }
  cases.push_back({"log_softmax", {r(3, 4)}, {true}, [](auto v) { return log_softmax_rows(v[0]); }});
  cases.push_back({"pick", {r(3, 4)}, {true}, [](auto v) {
                     static const std::size_t cols[] = {2, 0, 3};
                     return pick(v[0], cols);
                   }});
  cases.push_back({"outer_sum", {r(3, 1), r(4, 1)}, {true, true}, [](auto v) { return outer_sum(v[0], v[1]); }});
  return cases;
}

ActorSet gradcheck_actors(const GradcheckOptions& o, std::mt19937_64& rng) {
  ActorSet a;
  a.features = random_tensor(o.actors, o.feature_dim, rng);
  std::uniform_real_distribution<double> x(0.0, 420.0), y(0.0, 300.0);
  for (std::size_t i = 0; i < o.actors; ++i) a.positions.push_back({x(rng), y(rng)});
  a.frame_index.assign(o.actors, 0);
  return a;
}

}  // namespace

double relative_error(double analytic, double numeric, double floor) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), floor});
  return std::abs(analytic - numeric) / denom;
}

bool GradcheckReport::passed() const {
  auto ok = [](const GradcheckRow& r) { return r.passed; };
  return std::all_of(ops.begin(), ops.end(), ok) && std::all_of(models.begin(), models.end(), ok);
}

std::vector<GradcheckRow> check_ops(const GradcheckOptions& options) {
  std::mt19937_64 rng(options.seed);
  std::vector<GradcheckRow> rows;
  for (const OpCase& c : op_cases(rng)) rows.push_back(check_case(c, options, rng));
  return rows;
}

GradcheckRow check_model(AppearanceRelation appearance, PositionRelation position, Fusion fusion,
                         const GradcheckOptions& o) {
  ModelConfig config;
  config.relation.appearance = appearance;
  config.relation.position = position;
  config.relation.key_dim = o.key_dim;
  config.relation.encoding_dim = o.encoding_dim;
  config.relation.graph_count = o.graph_count;
  config.fusion = fusion;
  config.feature_dim = o.feature_dim;
  config.action_classes = 3;
  config.activity_classes = 4;
  config.frames = 1;

  std::mt19937_64 rng(o.seed + 1000 * static_cast<std::uint64_t>(appearance) +
                      100 * static_cast<std::uint64_t>(position) + 10 * static_cast<std::uint64_t>(fusion));
  Model model = init_model(config, rng());
  const ActorSet actors = gradcheck_actors(o, rng);
  std::vector<std::size_t> labels(o.actors);
  std::uniform_int_distribution<std::size_t> action(0, config.action_classes - 1);
  for (auto& y : labels) y = action(rng);
  const std::size_t group = std::uniform_int_distribution<std::size_t>(0, config.activity_classes - 1)(rng);
  const double lambda = 1.0;

  TapeOptions topts;
  topts.flip_backward = o.inject_fault;
  const SampleGradient analytic = loss_and_gradient(model, actors, group, labels, lambda, topts);

  GradcheckRow row;
  row.name = std::string(to_string(appearance)) + " / " + std::string(to_string(position)) + " / " +
             std::string(to_string(fusion));
  auto params = parameter_list(model.params);
  for (std::size_t p = 0; p < params.size(); ++p) {
    auto data = params[p].tensor->data();
    for (std::size_t k = 0; k < data.size(); ++k) {
      const double saved = data[k];
      data[k] = saved + o.step;
      const double up = joint_loss(forward(model, actors), group, labels, lambda);
      data[k] = saved - o.step;
      const double down = joint_loss(forward(model, actors), group, labels, lambda);
      data[k] = saved;
      const double numeric = (up - down) / (2.0 * o.step);
      row.max_rel_error =
          std::max(row.max_rel_error, relative_error(analytic.grads[p].data()[k], numeric, o.floor));
      ++row.entries;
    }
  }
  row.passed = row.max_rel_error < o.tolerance;
  return row;
}

GradcheckReport run_gradcheck(const GradcheckOptions& options) {
  GradcheckReport report;
  report.tolerance = options.tolerance;
  report.ops = check_ops(options);
  for (AppearanceRelation a : kAllAppearance)
    for (PositionRelation p : kAllPosition)
      for (Fusion f : kAllFusion) report.models.push_back(check_model(a, p, f, options));
  return report;
}

}  // namespace arg
