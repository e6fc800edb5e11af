#include "arg/tape.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <string>
#include <utility>

#include "arg/error.hpp"

namespace arg {

namespace {

constexpr std::array<std::string_view, 22> kOpNames = {
    "leaf",     "matmul",  "add",      "sub",         "scale",       "mul",
    "add_row_bias", "add_scalar", "concat_cols", "slice_cols", "transpose", "reshape",
    "col_max",  "row_sum", "sum_all",  "log",         "exp",         "relu",
    "row_softmax", "log_softmax", "pick", "outer_sum",
};

Tape& same_tape(Var a, Var b, const char* op) {
  if (!a.valid() || !b.valid()) throw PreconditionError(std::string(op) + ": invalid Var");
  if (&a.tape() != &b.tape()) throw PreconditionError(std::string(op) + ": operands on different tapes");
  return a.tape();
}

Tape& tape_of(Var a, const char* op) {
  if (!a.valid()) throw PreconditionError(std::string(op) + ": invalid Var");
  return a.tape();
}

Tape::Node make_node(OpKind op, std::initializer_list<Var> inputs, Tensor value) {
  Tape::Node n;
  n.op = op;
  n.value = std::move(value);
  for (Var v : inputs) n.inputs.push_back(v.id());
  return n;
}

}  // namespace

std::string_view op_name(OpKind op) noexcept {
  return kOpNames[static_cast<std::size_t>(op)];
}

std::optional<OpKind> op_from_name(std::string_view name) noexcept {
  for (std::size_t i = 0; i < kOpNames.size(); ++i) {
    if (kOpNames[i] == name) return static_cast<OpKind>(i);
  }
  return std::nullopt;
}

const Tensor& Var::value() const { return tape_->value(*this); }

Var Tape::variable(Tensor value) {
  Node n;
  n.value = std::move(value);
  n.needs_grad = true;
  return record(std::move(n));
}

Var Tape::constant(Tensor value) {
  Node n;
  n.value = std::move(value);
  return record(std::move(n));
}

Var Tape::record(Node node) {
  if (node.op != OpKind::Leaf) {
    node.needs_grad = std::any_of(node.inputs.begin(), node.inputs.end(),
                                  [&](std::uint32_t id) { return nodes_[id].needs_grad; });
  }
  nodes_.push_back(std::move(node));
  return Var(this, static_cast<std::uint32_t>(nodes_.size() - 1));
}

Tensor Tape::grad(Var v) const {
  const Node& n = nodes_.at(v.id_);
  if (n.grad.empty() && !n.value.empty()) return Tensor(n.value.rows(), n.value.cols());
  return n.grad;
}

Tensor& Tape::grad_slot(std::uint32_t id) {
  Node& n = nodes_[id];
  if (n.grad.empty()) n.grad = Tensor(n.value.rows(), n.value.cols());
  return n.grad;
}

void Tape::backward(Var loss) {
  if (loss.tape_ != this) throw PreconditionError("backward: loss is not on this tape");
  const Node& root = nodes_.at(loss.id_);
  if (root.value.rows() != 1 || root.value.cols() != 1) {
    throw ShapeError("backward: loss must be 1x1, got " + root.value.shape_str());
  }
  for (Node& n : nodes_) n.grad = Tensor();
  grad_slot(loss.id_)(0, 0) = 1.0;
  for (std::size_t id = loss.id_ + 1; id-- > 0;) {
    if (!nodes_[id].needs_grad || nodes_[id].grad.empty()) continue;
    backward_node(id);
  }
}

void Tape::backward_node(std::size_t id) {
  // `nodes_` is not resized during the sweep, so references stay valid.
  Node& n = nodes_[id];
  const Tensor& g = n.grad;
  const double sign = (options_.flip_backward && *options_.flip_backward == n.op) ? -1.0 : 1.0;
  auto wants = [&](std::size_t k) { return nodes_[n.inputs[k]].needs_grad; };
  auto in_value = [&](std::size_t k) -> const Tensor& { return nodes_[n.inputs[k]].value; };
  auto slot = [&](std::size_t k) -> Tensor& { return grad_slot(n.inputs[k]); };

  switch (n.op) {
    case OpKind::Leaf:
      break;
    case OpKind::MatMul:
      if (wants(0)) axpy_inplace(slot(0), matmul_nt(g, in_value(1)), sign);
      if (wants(1)) axpy_inplace(slot(1), matmul_tn(in_value(0), g), sign);
      break;
    case OpKind::Add:
      if (wants(0)) axpy_inplace(slot(0), g, sign);
      if (wants(1)) axpy_inplace(slot(1), g, sign);
      break;
    case OpKind::Sub:
      if (wants(0)) axpy_inplace(slot(0), g, sign);
      if (wants(1)) axpy_inplace(slot(1), g, -sign);
      break;
    case OpKind::Scale:
      if (wants(0)) axpy_inplace(slot(0), g, sign * n.scalar);
      break;
    case OpKind::Mul: {
      const Tensor& a = in_value(0);
      const Tensor& b = in_value(1);
      if (wants(0)) {
        Tensor& da = slot(0);
        for (std::size_t i = 0; i < g.size(); ++i) da[i] += sign * g[i] * b[i];
      }
      if (wants(1)) {
        Tensor& db = slot(1);
        for (std::size_t i = 0; i < g.size(); ++i) db[i] += sign * g[i] * a[i];
      }
      break;
    }
    case OpKind::AddRowBias:
      if (wants(0)) axpy_inplace(slot(0), g, sign);
      if (wants(1)) {
        Tensor& db = slot(1);
        for (std::size_t r = 0; r < g.rows(); ++r)
          for (std::size_t c = 0; c < g.cols(); ++c) db(0, c) += sign * g(r, c);
      }
      break;
    case OpKind::AddScalar:
      if (wants(0)) axpy_inplace(slot(0), g, sign);
      if (wants(1)) {
        double s = 0.0;
        for (double v : g.data()) s += v;
        slot(1)(0, 0) += sign * s;
      }
      break;
    case OpKind::ConcatCols: {
      std::size_t col = 0;
      for (std::size_t k = 0; k < n.inputs.size(); ++k) {
        const std::size_t w = in_value(k).cols();
        if (wants(k)) {
          Tensor& dk = slot(k);
          for (std::size_t r = 0; r < g.rows(); ++r)
            for (std::size_t c = 0; c < w; ++c) dk(r, c) += sign * g(r, col + c);
        }
        col += w;
      }
      break;
    }
    case OpKind::SliceCols:
      if (wants(0)) {
        Tensor& dx = slot(0);
        for (std::size_t r = 0; r < g.rows(); ++r)
          for (std::size_t c = 0; c < g.cols(); ++c) dx(r, n.offset + c) += sign * g(r, c);
      }
      break;
    case OpKind::Transpose:
      if (wants(0)) axpy_inplace(slot(0), arg::transpose(g), sign);
      break;
    case OpKind::Reshape:
      if (wants(0)) {
        Tensor& dx = slot(0);
        for (std::size_t i = 0; i < g.size(); ++i) dx[i] += sign * g[i];
      }
      break;
    case OpKind::ColMax:
      if (wants(0)) {
        Tensor& dx = slot(0);
        for (std::size_t c = 0; c < g.cols(); ++c) dx(n.indices[c], c) += sign * g(0, c);
      }
      break;
    case OpKind::RowSum:
      if (wants(0)) {
        Tensor& dx = slot(0);
        for (std::size_t r = 0; r < dx.rows(); ++r)
          for (std::size_t c = 0; c < dx.cols(); ++c) dx(r, c) += sign * g(r, 0);
      }
      break;
    case OpKind::SumAll:
      if (wants(0)) {
        Tensor& dx = slot(0);
        const double v = sign * g(0, 0);
        for (double& d : dx.data()) d += v;
      }
      break;
    case OpKind::Log:
      if (wants(0)) {
        const Tensor& x = in_value(0);
        Tensor& dx = slot(0);
        for (std::size_t i = 0; i < g.size(); ++i) dx[i] += sign * g[i] / x[i];
      }
      break;
    case OpKind::Exp:
      if (wants(0)) {
        Tensor& dx = slot(0);
        for (std::size_t i = 0; i < g.size(); ++i) dx[i] += sign * g[i] * n.value[i];
      }
      break;
    case OpKind::Relu:
      if (wants(0)) {
        const Tensor& x = in_value(0);
        Tensor& dx = slot(0);
        for (std::size_t i = 0; i < g.size(); ++i)
          if (x[i] > 0.0) dx[i] += sign * g[i];
      }
      break;
    case OpKind::RowSoftmax: {
      // saved(i,j) = exp(a_ij - m_i) / s_i, so out = w ⊙ saved.
      const Tensor& out = n.value;
      for (std::size_t r = 0; r < out.rows(); ++r) {
        double dot = 0.0;
        for (std::size_t c = 0; c < out.cols(); ++c) dot += g(r, c) * out(r, c);
        if (wants(0)) {
          Tensor& da = slot(0);
          for (std::size_t c = 0; c < out.cols(); ++c) da(r, c) += sign * out(r, c) * (g(r, c) - dot);
        }
        if (wants(1)) {
          Tensor& dw = slot(1);
          for (std::size_t c = 0; c < out.cols(); ++c)
            dw(r, c) += sign * n.saved(r, c) * (g(r, c) - dot);
        }
      }
      break;
    }
    case OpKind::LogSoftmax:
      if (wants(0)) {
        Tensor& dx = slot(0);
        const Tensor& out = n.value;
        for (std::size_t r = 0; r < out.rows(); ++r) {
          double gs = 0.0;
          for (std::size_t c = 0; c < out.cols(); ++c) gs += g(r, c);
          for (std::size_t c = 0; c < out.cols(); ++c)
            dx(r, c) += sign * (g(r, c) - std::exp(out(r, c)) * gs);
        }
      }
      break;
    case OpKind::Pick:
      if (wants(0)) {
        Tensor& dx = slot(0);
        for (std::size_t r = 0; r < g.rows(); ++r) dx(r, n.indices[r]) += sign * g(r, 0);
      }
      break;
    case OpKind::OuterSum:
      if (wants(0)) {
        Tensor& du = slot(0);
        for (std::size_t r = 0; r < g.rows(); ++r)
          for (std::size_t c = 0; c < g.cols(); ++c) du(r, 0) += sign * g(r, c);
      }
      if (wants(1)) {
        Tensor& dv = slot(1);
        for (std::size_t r = 0; r < g.rows(); ++r)
          for (std::size_t c = 0; c < g.cols(); ++c) dv(c, 0) += sign * g(r, c);
      }
      break;
  }
}

// ---------------------------------------------------------------------------

Var matmul(Var a, Var b) {
  Tape& t = same_tape(a, b, "matmul");
  return t.record(make_node(OpKind::MatMul, {a, b}, matmul(a.value(), b.value())));
}

Var add(Var a, Var b) {
  Tape& t = same_tape(a, b, "add");
  require_shape(a.value().same_shape(b.value()), "add", a.value(), b.value());
  Tensor out = a.value();
  add_inplace(out, b.value());
  return t.record(make_node(OpKind::Add, {a, b}, std::move(out)));
}

Var sub(Var a, Var b) {
  Tape& t = same_tape(a, b, "sub");
  require_shape(a.value().same_shape(b.value()), "sub", a.value(), b.value());
  Tensor out = a.value();
  axpy_inplace(out, b.value(), -1.0);
  return t.record(make_node(OpKind::Sub, {a, b}, std::move(out)));
}

Var scale(Var a, double c) {
  Tape& t = tape_of(a, "scale");
  Tensor out = a.value();
  for (double& v : out.data()) v *= c;
  auto n = make_node(OpKind::Scale, {a}, std::move(out));
  n.scalar = c;
  return t.record(std::move(n));
}

Var mul(Var a, Var b) {
  Tape& t = same_tape(a, b, "mul");
  require_shape(a.value().same_shape(b.value()), "mul", a.value(), b.value());
  Tensor out = a.value();
  const Tensor& bv = b.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= bv[i];
  return t.record(make_node(OpKind::Mul, {a, b}, std::move(out)));
}

Var add_row_bias(Var x, Var bias) {
  Tape& t = same_tape(x, bias, "add_row_bias");
  const Tensor& xv = x.value();
  const Tensor& bv = bias.value();
  require_shape(bv.rows() == 1 && bv.cols() == xv.cols(), "add_row_bias", xv, bv);
  Tensor out = xv;
  for (std::size_t r = 0; r < out.rows(); ++r)
    for (std::size_t c = 0; c < out.cols(); ++c) out(r, c) += bv(0, c);
  return t.record(make_node(OpKind::AddRowBias, {x, bias}, std::move(out)));
}

Var add_scalar(Var x, Var s) {
  Tape& t = same_tape(x, s, "add_scalar");
  require_shape(s.value().rows() == 1 && s.value().cols() == 1, "add_scalar", x.value(), s.value());
  Tensor out = x.value();
  const double sv = s.value()(0, 0);
  for (double& v : out.data()) v += sv;
  return t.record(make_node(OpKind::AddScalar, {x, s}, std::move(out)));
}

Var concat_cols(std::span<const Var> parts) {
  if (parts.empty()) throw PreconditionError("concat_cols: no operands");
  Tape& t = tape_of(parts[0], "concat_cols");
  const std::size_t rows = parts[0].rows();
  std::size_t cols = 0;
  for (Var p : parts) {
    same_tape(parts[0], p, "concat_cols");
    require_shape(p.rows() == rows, "concat_cols", parts[0].value(), p.value());
    cols += p.cols();
  }
  Tensor out(rows, cols);
  std::size_t col = 0;
  Tape::Node n;
  n.op = OpKind::ConcatCols;
  for (Var p : parts) {
    const Tensor& pv = p.value();
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < pv.cols(); ++c) out(r, col + c) = pv(r, c);
    col += pv.cols();
    n.inputs.push_back(p.id());
  }
  n.value = std::move(out);
  return t.record(std::move(n));
}

Var slice_cols(Var x, std::size_t begin, std::size_t count) {
  Tape& t = tape_of(x, "slice_cols");
  const Tensor& xv = x.value();
  if (begin + count > xv.cols()) {
    throw ShapeError("slice_cols: columns [" + std::to_string(begin) + ", " +
                     std::to_string(begin + count) + ") out of range for " + xv.shape_str());
  }
  Tensor out(xv.rows(), count);
  for (std::size_t r = 0; r < xv.rows(); ++r)
    for (std::size_t c = 0; c < count; ++c) out(r, c) = xv(r, begin + c);
  auto n = make_node(OpKind::SliceCols, {x}, std::move(out));
  n.offset = begin;
  return t.record(std::move(n));
}

Var transpose(Var x) {
  Tape& t = tape_of(x, "transpose");
  return t.record(make_node(OpKind::Transpose, {x}, transpose(x.value())));
}

Var reshape(Var x, std::size_t rows, std::size_t cols) {
  Tape& t = tape_of(x, "reshape");
  const Tensor& xv = x.value();
  if (rows * cols != xv.size()) {
    throw ShapeError("reshape: cannot view " + xv.shape_str() + " as [" + std::to_string(rows) +
                     "x" + std::to_string(cols) + "]");
  }
  std::vector<double> data(xv.data().begin(), xv.data().end());
  return t.record(make_node(OpKind::Reshape, {x}, Tensor(rows, cols, std::move(data))));
}

Var col_max(Var x) {
  Tape& t = tape_of(x, "col_max");
  const Tensor& xv = x.value();
  if (xv.rows() == 0) throw ShapeError("col_max: empty input " + xv.shape_str());
  Tensor out(1, xv.cols());
  std::vector<std::size_t> arg(xv.cols(), 0);
  for (std::size_t c = 0; c < xv.cols(); ++c) {
    double best = xv(0, c);
    for (std::size_t r = 1; r < xv.rows(); ++r) {
      if (xv(r, c) > best) {
        best = xv(r, c);
        arg[c] = r;
      }
    }
    out(0, c) = best;
  }
  auto n = make_node(OpKind::ColMax, {x}, std::move(out));
  n.indices = std::move(arg);
  return t.record(std::move(n));
}

Var row_sum(Var x) {
  Tape& t = tape_of(x, "row_sum");
  const Tensor& xv = x.value();
  Tensor out(xv.rows(), 1);
  for (std::size_t r = 0; r < xv.rows(); ++r) {
    double s = 0.0;
    for (double v : xv.row(r)) s += v;
    out(r, 0) = s;
  }
  return t.record(make_node(OpKind::RowSum, {x}, std::move(out)));
}

Var sum_all(Var x) {
  Tape& t = tape_of(x, "sum_all");
  double s = 0.0;
  for (double v : x.value().data()) s += v;
  return t.record(make_node(OpKind::SumAll, {x}, Tensor::scalar(s)));
}

Var log(Var x) {
  Tape& t = tape_of(x, "log");
  Tensor out = x.value();
  for (double& v : out.data()) {
    if (!(v > 0.0)) throw PreconditionError("log: non-positive input " + std::to_string(v));
    v = std::log(v);
  }
  return t.record(make_node(OpKind::Log, {x}, std::move(out)));
}

Var exp(Var x) {
  Tape& t = tape_of(x, "exp");
  Tensor out = x.value();
  for (double& v : out.data()) v = std::exp(v);
  return t.record(make_node(OpKind::Exp, {x}, std::move(out)));
}

Var relu(Var x) {
  Tape& t = tape_of(x, "relu");
  Tensor out = x.value();
  for (double& v : out.data()) v = v > 0.0 ? v : 0.0;
  return t.record(make_node(OpKind::Relu, {x}, std::move(out)));
}

Var weighted_row_softmax(Var logits, Var weights) {
  Tape& t = same_tape(logits, weights, "weighted_row_softmax");
  const Tensor& a = logits.value();
  const Tensor& w = weights.value();
  require_shape(a.same_shape(w), "weighted_row_softmax", a, w);
  Tensor out(a.rows(), a.cols());
  Tensor ratio(a.rows(), a.cols());
  for (std::size_t r = 0; r < a.rows(); ++r) {
    double m = -std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < a.cols(); ++c) {
      if (w(r, c) < 0.0) throw PreconditionError("weighted_row_softmax: negative weight");
      if (w(r, c) > 0.0) m = std::max(m, a(r, c));
    }
    if (m == -std::numeric_limits<double>::infinity()) {
      throw DegenerateRowError(r, "relation row " + std::to_string(r) +
                                      " has no positive position weight (0/0 normalization)");
    }
    double s = 0.0;
    for (std::size_t c = 0; c < a.cols(); ++c) {
      ratio(r, c) = std::exp(a(r, c) - m);
      s += w(r, c) * ratio(r, c);
    }
    if (!(s > 0.0)) {
      throw DegenerateRowError(r, "relation row " + std::to_string(r) + " normalizes to zero mass");
    }
    for (std::size_t c = 0; c < a.cols(); ++c) {
      ratio(r, c) /= s;
      out(r, c) = w(r, c) * ratio(r, c);
    }
  }
  auto n = make_node(OpKind::RowSoftmax, {logits, weights}, std::move(out));
  n.saved = std::move(ratio);
  return t.record(std::move(n));
}

Var masked_row_softmax(Var logits, Var mask) {
  const Tensor& m = mask.value();
  for (std::size_t r = 0; r < m.rows(); ++r) {
    bool any = false;
    for (double v : m.row(r)) {
      if (v != 0.0 && v != 1.0) throw PreconditionError("masked_row_softmax: mask entries must be 0 or 1");
      any = any || v == 1.0;
    }
    if (!any) {
      throw DegenerateRowError(r, "masked_row_softmax: mask row " + std::to_string(r) + " is all zero");
    }
  }
  return weighted_row_softmax(logits, mask);
}

Var log_softmax_rows(Var x) {
  Tape& t = tape_of(x, "log_softmax_rows");
  Tensor out = x.value();
  for (std::size_t r = 0; r < out.rows(); ++r) {
    auto row = out.row(r);
    const double m = *std::max_element(row.begin(), row.end());
    double s = 0.0;
    for (double v : row) s += std::exp(v - m);
    const double lse = m + std::log(s);
    for (double& v : row) v -= lse;
  }
  return t.record(make_node(OpKind::LogSoftmax, {x}, std::move(out)));
}

Var pick(Var x, std::span<const std::size_t> cols) {
  Tape& t = tape_of(x, "pick");
  const Tensor& xv = x.value();
  if (cols.size() != xv.rows()) {
    throw ShapeError("pick: " + std::to_string(cols.size()) + " indices for " + xv.shape_str());
  }
  Tensor out(xv.rows(), 1);
  for (std::size_t r = 0; r < xv.rows(); ++r) {
    if (cols[r] >= xv.cols()) throw ShapeError("pick: column index out of range");
    out(r, 0) = xv(r, cols[r]);
  }
  auto n = make_node(OpKind::Pick, {x}, std::move(out));
  n.indices.assign(cols.begin(), cols.end());
  return t.record(std::move(n));
}

Var outer_sum(Var u, Var v) {
  Tape& t = same_tape(u, v, "outer_sum");
  const Tensor& uv = u.value();
  const Tensor& vv = v.value();
  require_shape(uv.cols() == 1 && vv.cols() == 1, "outer_sum", uv, vv);
  Tensor out(uv.rows(), vv.rows());
  for (std::size_t r = 0; r < uv.rows(); ++r)
    for (std::size_t c = 0; c < vv.rows(); ++c) out(r, c) = uv(r, 0) + vv(c, 0);
  return t.record(make_node(OpKind::OuterSum, {u, v}, std::move(out)));
}

}  // namespace arg
