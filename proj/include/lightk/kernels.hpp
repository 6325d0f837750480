#pragma once

#include <memory>
#include <string_view>
#include <vector>

#include "lightk/graph.hpp"
#include "lightk/sparse.hpp"

namespace lightk {

enum class KernelKind { chebyshev, mixhop };

std::string_view to_string(KernelKind kind);

/// Renormalized self-loop adjacency D~^{-1/2} (A + I) D~^{-1/2}, D~ = D + I.
/// Symmetric, nonnegative, isolated nodes get a unit diagonal.
CsrMatrix normalized_adjacency(const Graph& g);

/// Largest eigenvalue of the normalized Laplacian I - D^{-1/2} A D^{-1/2},
/// by power iteration. Zero-degree nodes contribute a unit diagonal.
double laplacian_lambda_max(const Graph& g, double tol = 1e-6, int max_iter = 1000);

/// Scaled Laplacian 2 L / lambda_max - I. With the default lambda_max = 2 this
/// is -D^{-1/2} A D^{-1/2}; rows of isolated nodes are zero.
CsrMatrix scaled_laplacian(const Graph& g, double lambda_max = 2.0);

/// Scaled Laplacian with lambda_max estimated by `laplacian_lambda_max`.
CsrMatrix scaled_laplacian_exact(const Graph& g);

/// Normalized operator plus maximum order for one graph (or batch union).
/// Immutable; the operator is shared so autodiff nodes can hold it.
class PropagationPlan {
 public:
  static PropagationPlan build(const Graph& g, KernelKind kind, int k);

  KernelKind kind() const noexcept { return kind_; }
  int order() const noexcept { return k_; }
  const CsrMatrix& op() const noexcept { return *op_; }
  std::shared_ptr<const CsrMatrix> shared_op() const noexcept { return op_; }

  /// [T_0 X, ..., T_k X] for the plan's kernel.
  std::vector<Matrix> propagate(const Matrix& x) const;

 private:
  PropagationPlan(KernelKind kind, int k, std::shared_ptr<const CsrMatrix> op)
      : kind_(kind), k_(k), op_(std::move(op)) {}

  KernelKind kind_;
  int k_;
  std::shared_ptr<const CsrMatrix> op_;
};

/// T_0 X = X, T_1 X = L~X, T_m X = 2 L~ (T_{m-1} X) - T_{m-2} X.
std::vector<Matrix> cheb_propagate(const PropagationPlan& plan, const Matrix& x);

/// A^m X by m successive sparse products, m = 0..k.
std::vector<Matrix> mixhop_propagate(const PropagationPlan& plan, const Matrix& x);

}  // namespace lightk
