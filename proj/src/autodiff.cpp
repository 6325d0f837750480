#include "lightk/autodiff.hpp"

#include <cmath>
#include <cstdint>
#include <cstring>
#include <limits>

#include "lightk/errors.hpp"

namespace lightk {

const Matrix& Var::value() const { return tape_->value(id_); }

Matrix Var::grad() const {
  if (tape_->has_grad(id_)) return tape_->grad(id_);
  return Matrix::Zero(rows(), cols());
}

Var Tape::constant(Matrix value) { return record("constant", std::move(value), nullptr); }

Var Tape::parameter(Parameter& p) {
  Var v = record("parameter", p.value, nullptr);
  nodes_.back().param = &p;
  return v;
}

namespace {

// A double is NaN or Inf exactly when its exponent bits are all set. An
// integer reduction over those bits vectorizes, unlike a short-circuit scan.
bool all_finite(const Matrix& m) {
  constexpr std::uint64_t kExponent = 0x7ff0000000000000ULL;
  const auto n = static_cast<std::size_t>(m.size());
  std::uint64_t bad = 0;
  for (std::size_t i = 0; i < n; ++i) {
    std::uint64_t bits;
    std::memcpy(&bits, m.data() + i, sizeof bits);
    bad |= static_cast<std::uint64_t>((bits & kExponent) == kExponent);
  }
  return bad == 0;
}

}  // namespace

Var Tape::record(std::string_view op, Matrix value, Pullback pullback) {
  if (!all_finite(value)) {
    throw NumericError("non-finite value produced by op '" + std::string(op) + "'");
  }
  nodes_.push_back(Node{std::move(value), Matrix(), std::move(pullback), op, nullptr});
  return Var(this, nodes_.size() - 1);
}

Matrix& Tape::grad(std::size_t id) {
  Node& n = nodes_[id];
  if (n.grad.size() == 0) n.grad = Matrix::Zero(n.value.rows(), n.value.cols());
  return n.grad;
}

void Tape::backward(const Var& root) {
  if (&root.tape() != this) throw ArgumentError("backward: root belongs to another tape");
  if (value(root.id()).size() != 1) throw ShapeError("backward: root must be a 1x1 value");
  grad(root.id())(0, 0) += 1.0;
  for (std::size_t id = root.id() + 1; id-- > 0;) {
    Node& n = nodes_[id];
    if (n.grad.size() == 0) continue;
    if (n.pullback) n.pullback(*this, id);
    if (n.param) {
      if (n.param->grad.size() == 0) n.param->zero_grad();
      n.param->grad += n.grad;
    }
  }
}

namespace ad {
namespace {

void require(bool ok, std::string_view op, const std::string& msg) {
  if (!ok) throw ShapeError(std::string(op) + ": " + msg);
}

std::string shape(const Var& v) {
  return std::to_string(v.rows()) + "x" + std::to_string(v.cols());
}

void same_tape(const Var& a, const Var& b, std::string_view op) {
  if (&a.tape() != &b.tape()) throw ArgumentError(std::string(op) + ": operands on different tapes");
}

}  // namespace

Var matmul(const Var& a, const Var& b) {
  same_tape(a, b, "matmul");
  require(a.cols() == b.rows(), "matmul", shape(a) + " * " + shape(b));
  Matrix out(a.rows(), b.cols());
  out.noalias() = a.value() * b.value();
  const std::size_t ia = a.id();
  const std::size_t ib = b.id();
  return a.tape().record("matmul", std::move(out), [ia, ib](Tape& t, std::size_t self) {
    const Matrix& g = t.grad(self);
    t.grad(ia).noalias() += g * t.value(ib).transpose();
    t.grad(ib).noalias() += t.value(ia).transpose() * g;
  });
}

Var spmm(std::shared_ptr<const CsrMatrix> op, const Var& x) {
  require(static_cast<std::size_t>(x.rows()) == op->size, "spmm",
          "operator size " + std::to_string(op->size) + " vs input " + shape(x));
  Matrix out = op->multiply(x.value());
  const std::size_t ix = x.id();
  return x.tape().record("spmm", std::move(out), [ix, op = std::move(op)](Tape& t, std::size_t self) {
    const Matrix& g = t.grad(self);
    Matrix& gx = t.grad(ix);
    const auto cols = g.cols();
    // gx += op^T g
    for (std::size_t i = 0; i < op->size; ++i) {
      const double* src = g.data() + static_cast<Eigen::Index>(i) * cols;
      for (std::size_t p = op->row_ptr[i]; p < op->row_ptr[i + 1]; ++p) {
        double* dst = gx.data() + static_cast<Eigen::Index>(op->col_idx[p]) * cols;
        const double a = op->values[p];
        for (Eigen::Index c = 0; c < cols; ++c) dst[c] += a * src[c];
      }
    }
  });
}

Var add(const Var& a, const Var& b) {
  same_tape(a, b, "add");
  require(a.rows() == b.rows() && a.cols() == b.cols(), "add", shape(a) + " + " + shape(b));
  const std::size_t ia = a.id();
  const std::size_t ib = b.id();
  return a.tape().record("add", a.value() + b.value(), [ia, ib](Tape& t, std::size_t self) {
    t.grad(ia) += t.grad(self);
    t.grad(ib) += t.grad(self);
  });
}

Var sub(const Var& a, const Var& b) {
  same_tape(a, b, "sub");
  require(a.rows() == b.rows() && a.cols() == b.cols(), "sub", shape(a) + " - " + shape(b));
  const std::size_t ia = a.id();
  const std::size_t ib = b.id();
  return a.tape().record("sub", a.value() - b.value(), [ia, ib](Tape& t, std::size_t self) {
    t.grad(ia) += t.grad(self);
    t.grad(ib) -= t.grad(self);
  });
}

Var mul(const Var& a, const Var& b) {
  same_tape(a, b, "mul");
  require(a.rows() == b.rows() && a.cols() == b.cols(), "mul", shape(a) + " .* " + shape(b));
  const std::size_t ia = a.id();
  const std::size_t ib = b.id();
  Matrix out = a.value().cwiseProduct(b.value());
  return a.tape().record("mul", std::move(out), [ia, ib](Tape& t, std::size_t self) {
    const Matrix& g = t.grad(self);
    t.grad(ia) += g.cwiseProduct(t.value(ib));
    t.grad(ib) += g.cwiseProduct(t.value(ia));
  });
}

Var scale(const Var& a, double s) {
  const std::size_t ia = a.id();
  return a.tape().record("scale", a.value() * s, [ia, s](Tape& t, std::size_t self) {
    t.grad(ia) += t.grad(self) * s;
  });
}

Var mul_row(const Var& x, const Var& row) {
  same_tape(x, row, "mul_row");
  require(row.rows() == 1 && row.cols() == x.cols(), "mul_row", shape(x) + " .* " + shape(row));
  const std::size_t ix = x.id();
  const std::size_t ir = row.id();
  Matrix out = x.value().array().rowwise() * row.value().row(0).array();
  return x.tape().record("mul_row", std::move(out), [ix, ir](Tape& t, std::size_t self) {
    const Matrix& g = t.grad(self);
    t.grad(ix).array() += g.array().rowwise() * t.value(ir).row(0).array();
    t.grad(ir) += g.cwiseProduct(t.value(ix)).colwise().sum();
  });
}

Var add_row(const Var& x, const Var& row) {
  same_tape(x, row, "add_row");
  require(row.rows() == 1 && row.cols() == x.cols(), "add_row", shape(x) + " + " + shape(row));
  const std::size_t ix = x.id();
  const std::size_t ir = row.id();
  Matrix out = x.value().rowwise() + row.value().row(0);
  return x.tape().record("add_row", std::move(out), [ix, ir](Tape& t, std::size_t self) {
    const Matrix& g = t.grad(self);
    t.grad(ix) += g;
    t.grad(ir) += g.colwise().sum();
  });
}

Var mul_col(const Var& x, const Var& col) {
  same_tape(x, col, "mul_col");
  require(col.cols() == 1 && col.rows() == x.rows(), "mul_col", shape(x) + " .* " + shape(col));
  const std::size_t ix = x.id();
  const std::size_t ic = col.id();
  Matrix out = x.value().array().colwise() * col.value().col(0).array();
  return x.tape().record("mul_col", std::move(out), [ix, ic](Tape& t, std::size_t self) {
    const Matrix& g = t.grad(self);
    t.grad(ix).array() += g.array().colwise() * t.value(ic).col(0).array();
    t.grad(ic) += g.cwiseProduct(t.value(ix)).rowwise().sum();
  });
}

Var relu(const Var& x) {
  const std::size_t ix = x.id();
  Matrix out = x.value().cwiseMax(0.0);
  return x.tape().record("relu", std::move(out), [ix](Tape& t, std::size_t self) {
    t.grad(ix).array() += (t.value(ix).array() > 0.0).select(t.grad(self).array(), 0.0);
  });
}

Var row_normalize(const Var& x, double floor) {
  const std::size_t ix = x.id();
  const Eigen::VectorXd raw = x.value().rowwise().norm();
  Eigen::VectorXd norms = raw.cwiseMax(floor);
  Matrix out = x.value().array().colwise() / norms.array();
  return x.tape().record("row_normalize", std::move(out),
                         [ix, raw, norms, floor](Tape& t, std::size_t self) {
                           const Matrix& g = t.grad(self);
                           const Matrix& y = t.value(self);
                           Matrix& gx = t.grad(ix);
                           for (Eigen::Index i = 0; i < g.rows(); ++i) {
                             if (raw(i) > floor) {
                               const double proj = y.row(i).dot(g.row(i));
                               gx.row(i) += (g.row(i) - proj * y.row(i)) / norms(i);
                             } else {
                               gx.row(i) += g.row(i) / floor;
                             }
                           }
                         });
}

Var concat_cols(std::span<const Var> parts) {
  if (parts.empty()) throw ShapeError("concat_cols: no inputs");
  const Eigen::Index rows = parts.front().rows();
  Eigen::Index cols = 0;
  std::vector<std::size_t> ids;
  std::vector<Eigen::Index> widths;
  for (const Var& p : parts) {
    same_tape(parts.front(), p, "concat_cols");
    require(p.rows() == rows, "concat_cols", "row mismatch " + shape(p));
    ids.push_back(p.id());
    widths.push_back(p.cols());
    cols += p.cols();
  }
  Matrix out(rows, cols);
  Eigen::Index at = 0;
  for (const Var& p : parts) {
    out.middleCols(at, p.cols()) = p.value();
    at += p.cols();
  }
  return parts.front().tape().record(
      "concat_cols", std::move(out), [ids, widths](Tape& t, std::size_t self) {
        const Matrix& g = t.grad(self);
        Eigen::Index pos = 0;
        for (std::size_t i = 0; i < ids.size(); ++i) {
          t.grad(ids[i]) += g.middleCols(pos, widths[i]);
          pos += widths[i];
        }
      });
}

Var gather_rows(const Var& x, std::span<const std::size_t> rows) {
  const std::size_t ix = x.id();
  std::vector<std::size_t> idx(rows.begin(), rows.end());
  Matrix out(static_cast<Eigen::Index>(idx.size()), x.cols());
  for (std::size_t r = 0; r < idx.size(); ++r) {
    require(idx[r] < static_cast<std::size_t>(x.rows()), "gather_rows", "row index out of range");
    out.row(static_cast<Eigen::Index>(r)) = x.value().row(static_cast<Eigen::Index>(idx[r]));
  }
  return x.tape().record("gather_rows", std::move(out), [ix, idx = std::move(idx)](Tape& t, std::size_t self) {
    const Matrix& g = t.grad(self);
    Matrix& gx = t.grad(ix);
    for (std::size_t r = 0; r < idx.size(); ++r) {
      gx.row(static_cast<Eigen::Index>(idx[r])) += g.row(static_cast<Eigen::Index>(r));
    }
  });
}

Var segment_mean(const Var& x, std::span<const std::uint32_t> segment, std::size_t segments) {
  require(segment.size() == static_cast<std::size_t>(x.rows()), "segment_mean", "segment map length");
  const std::size_t ix = x.id();
  std::vector<std::uint32_t> seg(segment.begin(), segment.end());
  std::vector<double> counts(segments, 0.0);
  for (auto s : seg) {
    require(s < segments, "segment_mean", "segment id out of range");
    counts[s] += 1.0;
  }
  Matrix out = Matrix::Zero(static_cast<Eigen::Index>(segments), x.cols());
  for (std::size_t r = 0; r < seg.size(); ++r) out.row(seg[r]) += x.value().row(static_cast<Eigen::Index>(r));
  for (std::size_t s = 0; s < segments; ++s) {
    if (counts[s] > 0.0) out.row(static_cast<Eigen::Index>(s)) /= counts[s];
  }
  return x.tape().record("segment_mean", std::move(out),
                         [ix, seg = std::move(seg), counts = std::move(counts)](Tape& t, std::size_t self) {
                           const Matrix& g = t.grad(self);
                           Matrix& gx = t.grad(ix);
                           for (std::size_t r = 0; r < seg.size(); ++r) {
                             gx.row(static_cast<Eigen::Index>(r)) += g.row(seg[r]) / counts[seg[r]];
                           }
                         });
}

Var segment_max(const Var& x, std::span<const std::uint32_t> segment, std::size_t segments) {
  require(segment.size() == static_cast<std::size_t>(x.rows()), "segment_max", "segment map length");
  const std::size_t ix = x.id();
  const Eigen::Index cols = x.cols();
  const auto none = std::numeric_limits<std::size_t>::max();
  // winner[s * cols + c] = first row attaining the max.
  std::vector<std::size_t> winner(segments * static_cast<std::size_t>(cols), none);
  const Matrix& v = x.value();
  for (std::size_t r = 0; r < segment.size(); ++r) {
    const auto s = segment[r];
    require(s < segments, "segment_max", "segment id out of range");
    for (Eigen::Index c = 0; c < cols; ++c) {
      auto& w = winner[s * static_cast<std::size_t>(cols) + static_cast<std::size_t>(c)];
      if (w == none || v(static_cast<Eigen::Index>(r), c) > v(static_cast<Eigen::Index>(w), c)) w = r;
    }
  }
  Matrix out = Matrix::Zero(static_cast<Eigen::Index>(segments), cols);
  for (std::size_t s = 0; s < segments; ++s) {
    for (Eigen::Index c = 0; c < cols; ++c) {
      const auto w = winner[s * static_cast<std::size_t>(cols) + static_cast<std::size_t>(c)];
      if (w != none) out(static_cast<Eigen::Index>(s), c) = v(static_cast<Eigen::Index>(w), c);
    }
  }
  return x.tape().record("segment_max", std::move(out),
                         [ix, cols, winner = std::move(winner), none](Tape& t, std::size_t self) {
                           const Matrix& g = t.grad(self);
                           Matrix& gx = t.grad(ix);
                           for (std::size_t k = 0; k < winner.size(); ++k) {
                             if (winner[k] == none) continue;
                             const auto s = static_cast<Eigen::Index>(k / static_cast<std::size_t>(cols));
                             const auto c = static_cast<Eigen::Index>(k % static_cast<std::size_t>(cols));
                             gx(static_cast<Eigen::Index>(winner[k]), c) += g(s, c);
                           }
                         });
}

Var mul_const(const Var& x, Matrix mask) {
  require(mask.rows() == x.rows() && mask.cols() == x.cols(), "mul_const", "mask shape mismatch");
  const std::size_t ix = x.id();
  Matrix out = x.value().cwiseProduct(mask);
  return x.tape().record("mul_const", std::move(out), [ix, mask = std::move(mask)](Tape& t, std::size_t self) {
    t.grad(ix) += t.grad(self).cwiseProduct(mask);
  });
}

Var sum(const Var& x) {
  const std::size_t ix = x.id();
  Matrix out(1, 1);
  out(0, 0) = x.value().sum();
  return x.tape().record("sum", std::move(out), [ix](Tape& t, std::size_t self) {
    t.grad(ix).array() += t.grad(self)(0, 0);
  });
}

Var softmax_cross_entropy(const Var& logits, std::span<const int> labels) {
  const Eigen::Index n = logits.rows();
  require(static_cast<std::size_t>(n) == labels.size() && n > 0, "softmax_cross_entropy",
          "need one label per row");
  const Matrix& z = logits.value();
  Matrix probs(n, z.cols());
  double loss = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const int y = labels[static_cast<std::size_t>(i)];
    require(y >= 0 && y < z.cols(), "softmax_cross_entropy", "label out of range");
    Eigen::Index top = 0;
    const double m = z.row(i).maxCoeff(&top);
    // log1p keeps precision when the winning logit dominates.
    double others = 0.0;
    for (Eigen::Index j = 0; j < z.cols(); ++j) {
      if (j != top) others += std::exp(z(i, j) - m);
    }
    const double log_sum = std::log1p(others);
    probs.row(i) = (z.row(i).array() - m - log_sum).exp();
    loss += (m - z(i, y)) + log_sum;
  }
  Matrix out(1, 1);
  out(0, 0) = loss / static_cast<double>(n);
  std::vector<int> ys(labels.begin(), labels.end());
  const std::size_t il = logits.id();
  return logits.tape().record("softmax_cross_entropy", std::move(out),
                              [il, probs = std::move(probs), ys = std::move(ys)](Tape& t, std::size_t self) {
                                const double g = t.grad(self)(0, 0) / static_cast<double>(ys.size());
                                Matrix d = probs;
                                for (std::size_t i = 0; i < ys.size(); ++i) {
                                  d(static_cast<Eigen::Index>(i), ys[i]) -= 1.0;
                                }
                                t.grad(il) += d * g;
                              });
}

}  // namespace ad
}  // namespace lightk
