#include "lightk/kernels.hpp"

#include <cmath>
#include <random>

#include "lightk/errors.hpp"

namespace lightk {

std::string_view to_string(KernelKind kind) {
  return kind == KernelKind::chebyshev ? "chebyshev" : "mixhop";
}

CsrMatrix normalized_adjacency(const Graph& g) {
  const std::size_t n = g.num_nodes();
  std::vector<double> inv_sqrt(n);
  for (std::size_t i = 0; i < n; ++i) {
    inv_sqrt[i] = 1.0 / std::sqrt(static_cast<double>(g.degree(static_cast<NodeId>(i)) + 1));
  }
  CsrMatrix a;
  a.size = n;
  a.row_ptr.reserve(n + 1);
  a.col_idx.reserve(g.col_idx().size() + n);
  a.values.reserve(g.col_idx().size() + n);
  for (std::size_t i = 0; i < n; ++i) {
    bool diagonal_done = false;
    auto emit_diagonal = [&] {
      a.col_idx.push_back(static_cast<NodeId>(i));
      a.values.push_back(inv_sqrt[i] * inv_sqrt[i]);
      diagonal_done = true;
    };
    for (NodeId j : g.neighbors(static_cast<NodeId>(i))) {
      if (!diagonal_done && j > i) emit_diagonal();
      a.col_idx.push_back(j);
      a.values.push_back(inv_sqrt[i] * inv_sqrt[j]);
    }
    if (!diagonal_done) emit_diagonal();
    a.row_ptr.push_back(a.col_idx.size());
  }
  return a;
}

namespace {

// 2 L / lambda_max - I with L = I - D^{-1/2} A D^{-1/2}. Isolated nodes keep
// L_ii = 1 and have no off-diagonal terms.
CsrMatrix scaled_laplacian_impl(const Graph& g, double lambda_max) {
  if (!(lambda_max > 0.0)) throw ArgumentError("scaled_laplacian: lambda_max must be positive");
  const std::size_t n = g.num_nodes();
  const double scale = 2.0 / lambda_max;
  const double diag = scale - 1.0;
  std::vector<double> inv_sqrt(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const auto deg = g.degree(static_cast<NodeId>(i));
    if (deg > 0) inv_sqrt[i] = 1.0 / std::sqrt(static_cast<double>(deg));
  }
  CsrMatrix l;
  l.size = n;
  for (std::size_t i = 0; i < n; ++i) {
    bool diagonal_done = diag == 0.0;
    for (NodeId j : g.neighbors(static_cast<NodeId>(i))) {
      if (!diagonal_done && j > i) {
        l.col_idx.push_back(static_cast<NodeId>(i));
        l.values.push_back(diag);
        diagonal_done = true;
      }
      l.col_idx.push_back(j);
      l.values.push_back(-scale * inv_sqrt[i] * inv_sqrt[j]);
    }
    if (!diagonal_done) {
      l.col_idx.push_back(static_cast<NodeId>(i));
      l.values.push_back(diag);
    }
    l.row_ptr.push_back(l.col_idx.size());
  }
  return l;
}

}  // namespace

double laplacian_lambda_max(const Graph& g, double tol, int max_iter) {
  const std::size_t n = g.num_nodes();
  if (n == 0) return 0.0;
  // With lambda_max = 2 the scaled Laplacian is exactly L - I.
  const CsrMatrix neg_s = scaled_laplacian_impl(g, 2.0);
  Matrix v(static_cast<Eigen::Index>(n), 1);
  std::mt19937_64 rng(0x9e3779b97f4a7c15ULL);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  for (Eigen::Index i = 0; i < v.rows(); ++i) v(i, 0) = unif(rng);
  v /= v.norm();

  // Stop on the eigen-residual ||L v - lambda v||, which bounds the distance
  // from lambda to the spectrum for a symmetric operator.
  double lambda = 0.0;
  Matrix w;
  for (int it = 0; it < max_iter; ++it) {
    neg_s.multiply_into(v, w);
    w += v;  // w = L v
    lambda = v.col(0).dot(w.col(0));
    if ((w - lambda * v).norm() <= tol) break;
    const double norm = w.norm();
    if (norm == 0.0) return 0.0;
    v = w / norm;
  }
  return lambda;
}

CsrMatrix scaled_laplacian(const Graph& g, double lambda_max) {
  return scaled_laplacian_impl(g, lambda_max);
}

CsrMatrix scaled_laplacian_exact(const Graph& g) {
  const double lambda = laplacian_lambda_max(g);
  return scaled_laplacian_impl(g, lambda > 0.0 ? lambda : 2.0);
}

PropagationPlan PropagationPlan::build(const Graph& g, KernelKind kind, int k) {
  if (k < 0) throw ArgumentError("PropagationPlan: order must be >= 0");
  auto op = std::make_shared<const CsrMatrix>(kind == KernelKind::chebyshev ? scaled_laplacian(g)
                                                                            : normalized_adjacency(g));
  return PropagationPlan(kind, k, std::move(op));
}

std::vector<Matrix> PropagationPlan::propagate(const Matrix& x) const {
  return kind_ == KernelKind::chebyshev ? cheb_propagate(*this, x) : mixhop_propagate(*this, x);
}

std::vector<Matrix> cheb_propagate(const PropagationPlan& plan, const Matrix& x) {
  if (plan.kind() != KernelKind::chebyshev) throw ArgumentError("cheb_propagate: plan is not chebyshev");
  const auto k = static_cast<std::size_t>(plan.order());
  std::vector<Matrix> out;
  out.reserve(k + 1);
  out.push_back(x);
  if (k >= 1) out.push_back(plan.op().multiply(x));
  for (std::size_t m = 2; m <= k; ++m) {
    Matrix next = plan.op().multiply(out[m - 1]);
    next *= 2.0;
    next -= out[m - 2];
    out.push_back(std::move(next));
  }
  return out;
}

std::vector<Matrix> mixhop_propagate(const PropagationPlan& plan, const Matrix& x) {
  if (plan.kind() != KernelKind::mixhop) throw ArgumentError("mixhop_propagate: plan is not mixhop");
  const auto k = static_cast<std::size_t>(plan.order());
  std::vector<Matrix> out;
  out.reserve(k + 1);
  out.push_back(x);
  for (std::size_t m = 1; m <= k; ++m) out.push_back(plan.op().multiply(out[m - 1]));
  return out;
}

}  // namespace lightk
