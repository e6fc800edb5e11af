#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "arg/tensor.hpp"

namespace arg {

/// Every differentiable operation the tape knows how to reverse.
enum class OpKind : std::uint8_t {
  Leaf,
  MatMul,
  Add,
  Sub,
  Scale,
  Mul,
  AddRowBias,
  AddScalar,
  ConcatCols,
  SliceCols,
  Transpose,
  Reshape,
  ColMax,
  RowSum,
  SumAll,
  Log,
  Exp,
  Relu,
  RowSoftmax,
  LogSoftmax,
  Pick,
  OuterSum,
};

std::string_view op_name(OpKind op) noexcept;
std::optional<OpKind> op_from_name(std::string_view name) noexcept;

struct TapeOptions {
  /// Negative control for gradient checking: negate every gradient
  /// contribution produced by this op's backward rule.
  std::optional<OpKind> flip_backward;
};

class Tape;

/// Handle to a node on a tape. Cheap to copy; valid while the tape lives.
class Var {
 public:
  Var() = default;

  bool valid() const noexcept { return tape_ != nullptr; }
  Tape& tape() const noexcept { return *tape_; }
  std::uint32_t id() const noexcept { return id_; }

  const Tensor& value() const;
  std::size_t rows() const { return value().rows(); }
  std::size_t cols() const { return value().cols(); }

 private:
  friend class Tape;
  Var(Tape* tape, std::uint32_t id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  std::uint32_t id_ = 0;
};

/// Append-only record of a forward computation. `backward` walks the nodes
/// in strict reverse creation order. A tape is confined to one thread.
class Tape {
 public:
  explicit Tape(TapeOptions options = {}) : options_(options) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// Leaf that receives a gradient.
  Var variable(Tensor value);
  /// Leaf excluded from differentiation (inputs, masks).
  Var constant(Tensor value);

  const Tensor& value(Var v) const { return nodes_.at(v.id_).value; }
  /// ∂loss/∂v after `backward`; zeros when v was not reached.
  Tensor grad(Var v) const;
  OpKind op(Var v) const { return nodes_.at(v.id_).op; }
  std::size_t size() const noexcept { return nodes_.size(); }

  /// Reverse sweep from a 1×1 root. Clears gradients from any earlier sweep.
  void backward(Var loss);

  struct Node {
    OpKind op = OpKind::Leaf;
    bool needs_grad = false;
    std::vector<std::uint32_t> inputs;
    Tensor value;
    Tensor grad;
    Tensor saved;
    std::vector<std::size_t> indices;
    double scalar = 0.0;
    std::size_t offset = 0;
  };

  /// Internal: records a node. Used by the op implementations.
  Var record(Node node);
  const Node& node(Var v) const { return nodes_.at(v.id_); }

 private:
  void backward_node(std::size_t id);
  Tensor& grad_slot(std::uint32_t id);

  TapeOptions options_;
  std::vector<Node> nodes_;
};

// Differentiable operations. All operands must live on the same tape.

Var matmul(Var a, Var b);
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var scale(Var a, double c);
/// Elementwise product.
Var mul(Var a, Var b);
/// x (n×c) + b (1×c) broadcast over rows; the only broadcast supported.
Var add_row_bias(Var x, Var bias);
/// x + s for a 1×1 s.
Var add_scalar(Var x, Var s);
Var concat_cols(std::span<const Var> parts);
Var slice_cols(Var x, std::size_t begin, std::size_t count);
Var transpose(Var x);
Var reshape(Var x, std::size_t rows, std::size_t cols);
/// Column-wise max over rows (n×c → 1×c). Gradient flows to the first
/// maximal row only.
Var col_max(Var x);
/// n×c → n×1.
Var row_sum(Var x);
/// n×c → 1×1.
Var sum_all(Var x);
Var log(Var x);
Var exp(Var x);
/// max(0, x); subgradient 0 at 0.
Var relu(Var x);

/// out_ij = w_ij·exp(a_ij) / Σ_k w_ik·exp(a_ik) for non-negative weights w.
/// Stabilized by the row max over entries with w > 0. A row with no
/// positive weight raises DegenerateRowError.
Var weighted_row_softmax(Var logits, Var weights);
/// weighted_row_softmax with a 0/1 mask; all-zero mask rows are rejected.
Var masked_row_softmax(Var logits, Var mask);
Var log_softmax_rows(Var x);
/// out_i = x(i, cols[i]) as an n×1 column.
Var pick(Var x, std::span<const std::size_t> cols);
/// u (n×1), v (m×1) → n×m with out_ij = u_i + v_j.
Var outer_sum(Var u, Var v);

}  // namespace arg
