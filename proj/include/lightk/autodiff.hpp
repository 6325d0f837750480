#pragma once

#include <cstddef>
#include <deque>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lightk/matrix.hpp"
#include "lightk/sparse.hpp"

namespace lightk {

/// A named trainable tensor. `grad` is accumulated by Tape::backward and
/// cleared by zero_grad().
struct Parameter {
  std::string name;
  Matrix value;
  Matrix grad;

  Parameter() = default;
  Parameter(std::string n, Matrix v) : name(std::move(n)), value(std::move(v)) {}

  std::size_t size() const noexcept { return static_cast<std::size_t>(value.size()); }
  void zero_grad() { grad = Matrix::Zero(value.rows(), value.cols()); }
};

class Tape;

/// Handle to a node recorded on a Tape. Cheap to copy; valid while the tape
/// is alive.
class Var {
 public:
  Var() = default;

  const Matrix& value() const;
  /// Gradient after Tape::backward (zero matrix if no gradient reached it).
  Matrix grad() const;
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }
  Tape& tape() const { return *tape_; }
  std::size_t id() const noexcept { return id_; }

 private:
  friend class Tape;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

/// Reverse-mode tape. Nodes are appended in evaluation order; backward walks
/// them in reverse, calling each node's pullback.
class Tape {
 public:
  /// Pullback: reads grad(self) and accumulates into the inputs' grads.
  using Pullback = std::function<void(Tape&, std::size_t self)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Matrix value);
  Var parameter(Parameter& p);

  /// Records an op result. Throws NumericError naming `op` when `value`
  /// contains NaN or Inf.
  Var record(std::string_view op, Matrix value, Pullback pullback);

  const Matrix& value(std::size_t id) const { return nodes_[id].value; }
  /// Gradient slot of node `id`, zero-initialized on first access.
  Matrix& grad(std::size_t id);
  bool has_grad(std::size_t id) const { return nodes_[id].grad.size() != 0; }

  /// Seeds d(root)/d(root) = 1 for a 1x1 root, back-propagates, and adds the
  /// resulting gradients into every Parameter recorded on this tape.
  void backward(const Var& root);

  std::size_t size() const noexcept { return nodes_.size(); }

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    Pullback pullback;
    std::string_view op;
    Parameter* param = nullptr;
  };
  std::deque<Node> nodes_;
};

namespace ad {

Var matmul(const Var& a, const Var& b);
/// op * x with a constant sparse operator.
Var spmm(std::shared_ptr<const CsrMatrix> op, const Var& x);
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var scale(const Var& a, double s);
/// x (n x d) times a 1 x d row, broadcast over rows.
Var mul_row(const Var& x, const Var& row);
/// x (n x d) plus a 1 x d row, broadcast over rows.
Var add_row(const Var& x, const Var& row);
/// Row i of x (n x d) scaled by s(i) for an n x 1 column s.
Var mul_col(const Var& x, const Var& col);
Var relu(const Var& x);
/// Row-wise x_i / max(||x_i||, floor).
Var row_normalize(const Var& x, double floor = 1e-12);
Var concat_cols(std::span<const Var> parts);
Var gather_rows(const Var& x, std::span<const std::size_t> rows);
/// Per-segment column means; segments are given per row of x.
Var segment_mean(const Var& x, std::span<const std::uint32_t> segment, std::size_t segments);
/// Per-segment column maxima. The first row attaining the max receives the
/// gradient. Empty segments yield 0.
Var segment_max(const Var& x, std::span<const std::uint32_t> segment, std::size_t segments);
/// Elementwise product with a constant (e.g. a dropout mask).
Var mul_const(const Var& x, Matrix mask);
/// Sum of all entries, 1 x 1.
Var sum(const Var& x);
/// Mean softmax cross-entropy of the rows of `logits` against `labels`, 1 x 1.
Var softmax_cross_entropy(const Var& logits, std::span<const int> labels);

}  // namespace ad

}  // namespace lightk
