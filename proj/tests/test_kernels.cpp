#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>
#include <numeric>

#include "lightk/errors.hpp"
#include "lightk/kernels.hpp"
#include "lightk/verify.hpp"
#include "support.hpp"

using namespace lightk;
using lightk::testing::complete_graph;
using lightk::testing::path_graph;

namespace {

Matrix column(std::initializer_list<double> values) {
  Matrix m(static_cast<Eigen::Index>(values.size()), 1);
  Eigen::Index i = 0;
  for (double v : values) m(i++, 0) = v;
  return m;
}

}  // namespace

TEST(NormalizedAdjacency, PathOfTwo) {
  const Matrix a = normalized_adjacency(path_graph(2)).to_dense();
  EXPECT_TRUE(a.isApprox(Matrix::Constant(2, 2, 0.5), 1e-15));
}

TEST(NormalizedAdjacency, IsolatedNode) {
  const Matrix a = normalized_adjacency(Graph::from_edges(1, {}, Matrix::Ones(1, 1), 0)).to_dense();
  EXPECT_DOUBLE_EQ(a(0, 0), 1.0);
}

TEST(NormalizedAdjacency, Triangle) {
  const Matrix a = normalized_adjacency(complete_graph(3)).to_dense();
  EXPECT_LT((a - Matrix::Constant(3, 3, 1.0 / 3.0)).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(NormalizedAdjacency, SymmetricNonnegativeContractive) {
  std::mt19937_64 rng(8);
  for (int t = 0; t < 20; ++t) {
    const Graph g = verify::random_graph(10, 0.3, 1, rng);
    const CsrMatrix a = normalized_adjacency(g);
    EXPECT_TRUE(a.is_symmetric(1e-15));
    const Matrix d = a.to_dense();
    EXPECT_GE(d.minCoeff(), 0.0);
    // Row sums can exceed 1 under symmetric normalization; the spectrum cannot.
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig{Eigen::MatrixXd(d)};
    EXPECT_LE(eig.eigenvalues().cwiseAbs().maxCoeff(), 1.0 + 1e-12);
  }
}

TEST(ScaledLaplacian, PathOfTwo) {
  Matrix expect(2, 2);
  expect << 0, -1, -1, 0;
  EXPECT_EQ(scaled_laplacian(path_graph(2)).to_dense(), expect);
}

TEST(ScaledLaplacian, EdgelessIsZero) {
  const Graph g = Graph::from_edges(3, {}, Matrix::Ones(3, 1), 0);
  EXPECT_EQ(scaled_laplacian(g).to_dense(), Matrix::Zero(3, 3));
}

TEST(ScaledLaplacian, ExactLambdaTriangle) {
  EXPECT_NEAR(laplacian_lambda_max(complete_graph(3)), 1.5, 1e-6);
  // Against a dense eigensolve on random graphs.
  std::mt19937_64 rng(3);
  for (int t = 0; t < 10; ++t) {
    const Graph g = verify::random_graph(9, 0.4, 1, rng);
    const Matrix lap = (verify::dense_scaled_laplacian(g) + Matrix::Identity(9, 9)).eval();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig{Eigen::MatrixXd(lap)};
    EXPECT_NEAR(laplacian_lambda_max(g), eig.eigenvalues().maxCoeff(), 1e-5);
  }
  const Matrix exact = scaled_laplacian_exact(complete_graph(3)).to_dense();
  EXPECT_TRUE(exact.isApprox(verify::dense_scaled_laplacian(complete_graph(3), 1.5), 1e-5));
}

TEST(ScaledLaplacian, SpectralRadiusAtMostOne) {
  std::mt19937_64 rng(12);
  for (int t = 0; t < 20; ++t) {
    const Graph g = verify::random_graph(10, 0.4, 1, rng);
    const Matrix l = scaled_laplacian(g).to_dense();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig{Eigen::MatrixXd(l)};
    EXPECT_LE(eig.eigenvalues().cwiseAbs().maxCoeff(), 1.0 + 1e-12);
  }
}

TEST(ChebPropagate, PathOfTwo) {
  const auto plan = PropagationPlan::build(path_graph(2), KernelKind::chebyshev, 2);
  const auto t = cheb_propagate(plan, column({1, 0}));
  ASSERT_EQ(t.size(), 3u);
  EXPECT_EQ(t[0], column({1, 0}));
  EXPECT_EQ(t[1], column({0, -1}));
  EXPECT_EQ(t[2], column({1, 0}));
}

TEST(ChebPropagate, OrderZeroIsIdentity) {
  std::mt19937_64 rng(1);
  const Matrix x = lightk::testing::random_matrix(3, 2, rng);
  const auto t = cheb_propagate(PropagationPlan::build(complete_graph(3), KernelKind::chebyshev, 0), x);
  ASSERT_EQ(t.size(), 1u);
  EXPECT_EQ(t[0], x);
}

TEST(ChebPropagate, MatchesDenseOracle) {
  std::mt19937_64 rng(21);
  const Graph g = verify::random_graph(8, 0.4, 3, rng);
  const auto t = cheb_propagate(PropagationPlan::build(g, KernelKind::chebyshev, 4), g.features());
  const auto ref = verify::dense_chebyshev(verify::dense_scaled_laplacian(g), g.features(), 4);
  for (int m = 0; m <= 4; ++m) EXPECT_LE(verify::relative_error(t[m], ref[m]), 1e-10) << m;
}

TEST(MixhopPropagate, PathOfTwo) {
  const auto plan = PropagationPlan::build(path_graph(2), KernelKind::mixhop, 2);
  const auto t = mixhop_propagate(plan, column({1, 0}));
  EXPECT_TRUE(t[1].isApprox(column({0.5, 0.5}), 1e-15));
  EXPECT_TRUE(t[2].isApprox(column({0.5, 0.5}), 1e-15));
}

TEST(MixhopPropagate, OrderZeroIsIdentity) {
  const Matrix x = column({3, -1, 2});
  const auto t = mixhop_propagate(PropagationPlan::build(complete_graph(3), KernelKind::mixhop, 0), x);
  ASSERT_EQ(t.size(), 1u);
  EXPECT_EQ(t[0], x);
}

TEST(MixhopPropagate, MatchesDenseOracleAndAssociates) {
  std::mt19937_64 rng(22);
  const Graph g = verify::random_graph(8, 0.4, 3, rng);
  const auto plan = PropagationPlan::build(g, KernelKind::mixhop, 3);
  const auto t = mixhop_propagate(plan, g.features());
  const auto ref = verify::dense_powers(verify::dense_normalized_adjacency(g), g.features(), 3);
  for (int m = 0; m <= 3; ++m) EXPECT_LE(verify::relative_error(t[m], ref[m]), 1e-10) << m;
  for (int m = 1; m <= 3; ++m) EXPECT_LE(verify::relative_error(plan.op().multiply(t[m - 1]), t[m]), 1e-15);
}

TEST(Propagate, KindMismatchThrows) {
  const auto plan = PropagationPlan::build(path_graph(2), KernelKind::mixhop, 1);
  EXPECT_THROW(cheb_propagate(plan, column({1, 0})), ArgumentError);
  EXPECT_THROW(plan.op().multiply(column({1, 0, 0})), ShapeError);
}

TEST(Propagate, RandomGraphsAgainstDense) {
  std::mt19937_64 rng(99);
  std::uniform_int_distribution<std::size_t> size(1, 12);
  for (int t = 0; t < 100; ++t) {
    const Graph g = verify::random_graph(size(rng), 0.4, 2, rng);
    const auto cheb = cheb_propagate(PropagationPlan::build(g, KernelKind::chebyshev, 5), g.features());
    const auto cref = verify::dense_chebyshev(verify::dense_scaled_laplacian(g), g.features(), 5);
    const auto mix = mixhop_propagate(PropagationPlan::build(g, KernelKind::mixhop, 5), g.features());
    const auto mref = verify::dense_powers(verify::dense_normalized_adjacency(g), g.features(), 5);
    for (int m = 0; m <= 5; ++m) {
      ASSERT_LE(verify::relative_error(cheb[m], cref[m]), 1e-10);
      ASSERT_LE(verify::relative_error(mix[m], mref[m]), 1e-10);
    }
  }
}

TEST(Propagate, PermutationEquivariant) {
  std::mt19937_64 rng(31);
  const Graph g = verify::random_graph(9, 0.4, 2, rng);
  std::vector<NodeId> perm(9);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  const Graph pg = lightk::testing::permute(g, perm);
  for (KernelKind kind : {KernelKind::chebyshev, KernelKind::mixhop}) {
    const auto a = PropagationPlan::build(g, kind, 3).propagate(g.features());
    const auto b = PropagationPlan::build(pg, kind, 3).propagate(pg.features());
    for (int m = 0; m <= 3; ++m) {
      for (std::size_t i = 0; i < 9; ++i) {
        EXPECT_LE((a[m].row(i) - b[m].row(perm[i])).cwiseAbs().maxCoeff(), 1e-12);
      }
    }
  }
}

TEST(Propagate, Linear) {
  std::mt19937_64 rng(41);
  const Graph g = verify::random_graph(10, 0.4, 2, rng);
  const Matrix x = lightk::testing::random_matrix(10, 2, rng);
  const Matrix y = lightk::testing::random_matrix(10, 2, rng);
  for (KernelKind kind : {KernelKind::chebyshev, KernelKind::mixhop}) {
    const auto plan = PropagationPlan::build(g, kind, 4);
    const auto lhs = plan.propagate(2.5 * x - 0.75 * y);
    const auto px = plan.propagate(x);
    const auto py = plan.propagate(y);
    for (int m = 0; m <= 4; ++m) {
      EXPECT_LE((lhs[m] - (2.5 * px[m] - 0.75 * py[m])).cwiseAbs().maxCoeff(), 1e-12);
    }
  }
}
