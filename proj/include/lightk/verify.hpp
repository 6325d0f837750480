#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "lightk/autodiff.hpp"
#include "lightk/graph.hpp"
#include "lightk/model.hpp"

namespace lightk::verify {

// Dense reference implementations. These build n x n matrices straight from
// the edge list and never touch the CSR kernels they are compared against.

Matrix dense_adjacency(const Graph& g);
Matrix dense_scaled_laplacian(const Graph& g, double lambda_max = 2.0);
Matrix dense_normalized_adjacency(const Graph& g);
/// [T_0 X .. T_k X] from dense Chebyshev matrix polynomials of `op`.
std::vector<Matrix> dense_chebyshev(const Matrix& op, const Matrix& x, int k);
/// [X, A X, .., A^k X] from dense matrix powers of `op`.
std::vector<Matrix> dense_powers(const Matrix& op, const Matrix& x, int k);

/// Frobenius-norm relative error ||a - b|| / max(||b||, 1e-300).
double relative_error(const Matrix& a, const Matrix& b);

/// Erdos-Renyi graph with standard-normal features and a random label in {0,1}.
Graph random_graph(std::size_t n, double edge_prob, std::size_t features, std::mt19937_64& rng);

struct GradCheck {
  std::string name;
  double max_rel_error = 0.0;
  bool passed = false;
};

using TapeFunction = std::function<Var(std::span<const Var>)>;

/// Compares reverse-mode gradients of sum(f(inputs) .* R), R a fixed random
/// weighting, against central differences with the given step. Relative error
/// per entry is |analytic - numeric| / max(|analytic|, |numeric|, 1e-3).
GradCheck check_gradients(const std::string& name, std::vector<Matrix> inputs, const TapeFunction& f,
                          double step = 1e-5, double tolerance = 1e-4, std::uint64_t seed = 17);

/// Central-difference check of the mean cross-entropy of `model` on `batch`
/// (evaluation mode) over every parameter entry.
GradCheck check_model_gradients(Model& model, const Batch& batch, double step = 1e-5, double tolerance = 1e-4);

/// One finite-difference check per differentiable op.
std::vector<GradCheck> op_gradient_checks(double tolerance = 1e-4);

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

/// The self-check suite: kernel-vs-dense equivalence, gradient checks,
/// pooling keep counts, and entropy trivia.
std::vector<CheckResult> run_suite();

}  // namespace lightk::verify
