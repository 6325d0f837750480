#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "lightk/autodiff.hpp"
#include "lightk/errors.hpp"
#include "lightk/kernels.hpp"
#include "lightk/layers.hpp"
#include "lightk/verify.hpp"
#include "support.hpp"

using namespace lightk;
using lightk::testing::complete_graph;
using lightk::testing::path_graph;
using lightk::testing::random_matrix;

// ---- autodiff ----

TEST(Autodiff, EveryOpPassesGradientCheck) {
  for (const auto& check : verify::op_gradient_checks(1e-4)) {
    EXPECT_TRUE(check.passed) << check.name << " max rel error " << check.max_rel_error;
  }
}

TEST(Autodiff, WrongPullbackIsCaught) {
  // A square op whose pullback forgets the factor 2.
  auto broken_square = [](std::span<const Var> v) {
    const Var& x = v[0];
    Tape& tape = x.tape();
    const std::size_t in = x.id();
    return tape.record("broken_square", x.value().cwiseProduct(x.value()),
                       [in](Tape& t, std::size_t self) { t.grad(in) += t.grad(self).cwiseProduct(t.value(in)); });
  };
  std::mt19937_64 rng(1);
  const auto check = verify::check_gradients("broken_square", {random_matrix(3, 2, rng)}, broken_square);
  EXPECT_FALSE(check.passed);
  EXPECT_EQ(check.name, "broken_square");
}

TEST(Autodiff, NonFiniteForwardNamesOp) {
  Tape tape;
  Matrix big(1, 1);
  big << 1e308;
  const Var x = tape.constant(big);
  try {
    ad::scale(x, 10.0);
    FAIL() << "expected NumericError";
  } catch (const NumericError& e) {
    EXPECT_NE(std::string(e.what()).find("scale"), std::string::npos);
  }
}

TEST(Autodiff, DeadReluHasZeroGradient) {
  Parameter p("x", Matrix::Constant(2, 3, -1.5));
  p.zero_grad();
  Tape tape;
  tape.backward(ad::sum(ad::relu(tape.parameter(p))));
  EXPECT_EQ(p.grad, Matrix::Zero(2, 3));
}

TEST(Autodiff, SaturatedLossHasVanishingGradient) {
  Matrix logits(2, 2);
  logits << 40, -40, -40, 40;
  Parameter p("logits", logits);
  p.zero_grad();
  Tape tape;
  const std::vector<int> labels{0, 1};
  tape.backward(ad::softmax_cross_entropy(tape.parameter(p), labels));
  EXPECT_LE(p.grad.cwiseAbs().maxCoeff(), 1e-6);
}

TEST(Autodiff, SegmentMaxFirstIndexWinsTies) {
  Matrix x(3, 1);
  x << 2.0, 2.0, 1.0;
  Parameter p("x", x);
  p.zero_grad();
  Tape tape;
  const std::vector<std::uint32_t> seg{0, 0, 0};
  tape.backward(ad::sum(ad::segment_max(tape.parameter(p), seg, 1)));
  EXPECT_EQ(p.grad(0, 0), 1.0);
  EXPECT_EQ(p.grad(1, 0), 0.0);
  EXPECT_EQ(p.grad(2, 0), 0.0);
}

TEST(Autodiff, GradientsAccumulateAcrossUses) {
  Parameter p("x", Matrix::Constant(1, 1, 3.0));
  p.zero_grad();
  Tape tape;
  const Var x = tape.parameter(p);
  tape.backward(ad::sum(ad::add(ad::mul(x, x), x)));  // d/dx (x^2 + x) = 7
  EXPECT_DOUBLE_EQ(p.grad(0, 0), 7.0);
}

// ---- light convolution ----

TEST(LiConv, HandEvaluatedMerge) {
  // Node 0: z0 = [1,2] (X W with W = I), z1 = T_1 z0 taken from node 1's row.
  // P2 mixhop operator is 0.5 everywhere, so pick features making z1 = [3,4].
  Matrix x(2, 2);
  x << 1, 2, 5, 6;  // A x row 0 = 0.5 * ([1,2] + [5,6]) = [3,4]
  const auto plan = PropagationPlan::build(path_graph(2), KernelKind::mixhop, 1);
  std::mt19937_64 rng(0);
  LiConvParams p = LiConvParams::init("c", 2, 2, 1, rng);
  p.weight.value = Matrix::Identity(2, 2);
  p.merge.value << 1, 0, 0, 1;
  p.bias.value.setZero();
  Tape tape;
  const ConvOutput out = liconv_forward(plan, tape.constant(x), p);
  const Matrix z1 = out.anchors.slice(1).row(0);
  const Matrix merged = out.out.value().row(0);
  EXPECT_TRUE(z1.isApprox((Matrix(1, 2) << 3, 4).finished(), 1e-15));
  EXPECT_TRUE(merged.isApprox((Matrix(1, 2) << 1, 4).finished(), 1e-15));
}

TEST(LiConv, OrderZeroIsScaledLinear) {
  std::mt19937_64 rng(2);
  const Graph g = complete_graph(4, random_matrix(4, 3, rng));
  LiConvParams p = LiConvParams::init("c", 3, 5, 0, rng);
  p.merge.value = random_matrix(1, 5, rng);
  p.bias.value = random_matrix(1, 5, rng);
  Tape tape;
  const auto out = liconv_forward(PropagationPlan::build(g, KernelKind::chebyshev, 0), tape.constant(g.features()), p);
  Matrix expect = (g.features() * p.weight.value).array().rowwise() * p.merge.value.row(0).array();
  expect.rowwise() += p.bias.value.row(0);
  EXPECT_LE((out.out.value() - expect).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(LiConv, AnchorsMatchKernelsAndBiasAddedOnce) {
  std::mt19937_64 rng(3);
  const Graph g = verify::random_graph(9, 0.4, 3, rng);
  for (KernelKind kind : {KernelKind::chebyshev, KernelKind::mixhop}) {
    LiConvParams p = LiConvParams::init("c", 3, 4, 3, rng);
    p.bias.value = random_matrix(1, 4, rng);
    const auto plan = PropagationPlan::build(g, kind, 3);
    Tape tape;
    const auto out = liconv_forward(plan, tape.constant(g.features()), p);
    const auto ref = plan.propagate(g.features() * p.weight.value);
    Matrix sum = Matrix::Zero(9, 4);
    for (int m = 0; m <= 3; ++m) {
      EXPECT_LE(verify::relative_error(out.anchors.slice(m), ref[m]), 1e-12);
      sum += (ref[m].array().rowwise() * p.merge.value.row(m).array()).matrix();
    }
    sum.rowwise() += p.bias.value.row(0);
    EXPECT_LE((out.out.value() - sum).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(LiConv, ShapeMismatchThrows) {
  std::mt19937_64 rng(4);
  LiConvParams p = LiConvParams::init("c", 3, 4, 2, rng);
  Tape tape;
  const Graph g = complete_graph(3, random_matrix(3, 2, rng));
  EXPECT_THROW(liconv_forward(PropagationPlan::build(g, KernelKind::chebyshev, 2), tape.constant(g.features()), p),
               ShapeError);
}

TEST(LiConv, ParameterCountIdentity) {
  std::mt19937_64 rng(5);
  const LiConvParams p = LiConvParams::init("c", 37, 128, 2, rng);
  EXPECT_EQ(p.weight_count(), 5120u);
  EXPECT_LT(p.weight_count(), 3u * 37u * 128u);
  EXPECT_EQ(3u * 37u * 128u, 14208u);
  EXPECT_EQ(KPoolParams::init("p", 128, 2, 0.6, 0.8, {}, rng).theta.size(), 384u);
}

// ---- pooling ----

namespace {

struct PoolFixture {
  Batch batch;
  LiConvParams conv;
  KPoolParams pool;
};

PoolFixture make_fixture(std::vector<Graph> members, double rho_v, double rho_e, PoolFlags flags, int k,
                         std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const std::size_t d = members.front().num_features();
  return {build_batch(members), LiConvParams::init("c", d, 4, k, rng),
          KPoolParams::init("p", 4, k, rho_v, rho_e, flags, rng)};
}

}  // namespace

TEST(KPool, ZeroThetaKeepsLowestIndices) {
  std::mt19937_64 rng(6);
  auto f = make_fixture({verify::random_graph(6, 0.5, 3, rng)}, 0.5, 1.0, {}, 2, 1);
  f.pool.theta.value.setZero();
  Tape tape;
  const auto conv = liconv_forward(f.batch, tape.constant(f.batch.graph.features()), f.conv, KernelKind::chebyshev);
  const PoolResult r = pool_forward(f.batch, conv.anchors, conv.out, f.pool);
  EXPECT_EQ(r.kept_nodes, (std::vector<std::size_t>{0, 1, 2}));
  EXPECT_EQ(r.scores.value(), Matrix::Zero(6, 1));
  EXPECT_EQ(r.x.value(), Matrix::Zero(3, 4));
}

TEST(KPool, IdenticalEndpointsScoreOne) {
  Matrix x(2, 3);
  x << 1, 2, 3, 1, 2, 3;
  const std::vector<Edge> e{{0, 1}};
  EXPECT_EQ(edge_scores(x, e), std::vector<double>{1.0});
}

TEST(KPool, FiveNodesSixtyPercent) {
  EXPECT_EQ(keep_count(0.6, 5), 3u);
  EXPECT_EQ(keep_count(0.9, 10), 9u);
  EXPECT_EQ(keep_count(1.0, 7), 7u);
  std::mt19937_64 rng(7);
  auto f = make_fixture({verify::random_graph(5, 0.5, 2, rng)}, 0.6, 0.8, {}, 2, 2);
  Tape tape;
  const auto conv = liconv_forward(f.batch, tape.constant(f.batch.graph.features()), f.conv, KernelKind::mixhop);
  EXPECT_EQ(pool_forward(f.batch, conv.anchors, conv.out, f.pool).kept_nodes.size(), 3u);
}

TEST(KPool, FullRatiosAreIdentityStructure) {
  std::mt19937_64 rng(8);
  std::vector<Graph> members{verify::random_graph(7, 0.4, 2, rng), verify::random_graph(4, 0.6, 2, rng)};
  auto f = make_fixture(members, 1.0, 1.0, {}, 2, 3);
  Tape tape;
  const auto conv = liconv_forward(f.batch, tape.constant(f.batch.graph.features()), f.conv, KernelKind::chebyshev);
  const PoolResult r = pool_forward(f.batch, conv.anchors, conv.out, f.pool);
  std::vector<std::size_t> all(11);
  std::iota(all.begin(), all.end(), 0);
  EXPECT_EQ(r.kept_nodes, all);
  EXPECT_EQ(r.kept_edges, f.batch.graph.edge_list());
  EXPECT_EQ(r.batch.offsets, f.batch.offsets);
}

TEST(KPool, NormalizedFeaturesHaveScoreNorm) {
  std::mt19937_64 rng(9);
  auto f = make_fixture({verify::random_graph(10, 0.4, 3, rng)}, 0.7, 0.5, {}, 2, 4);
  Tape tape;
  const auto conv = liconv_forward(f.batch, tape.constant(f.batch.graph.features()), f.conv, KernelKind::chebyshev);
  const PoolResult r = pool_forward(f.batch, conv.anchors, conv.out, f.pool);
  for (std::size_t i = 0; i < r.kept_nodes.size(); ++i) {
    const double w = r.scores.value()(static_cast<Eigen::Index>(r.kept_nodes[i]), 0);
    EXPECT_NEAR(r.x.value().row(static_cast<Eigen::Index>(i)).norm(), w, 1e-12);
  }
}

TEST(KPool, ScoresAreReluOfAttention) {
  std::mt19937_64 rng(10);
  auto f = make_fixture({verify::random_graph(8, 0.4, 3, rng)}, 1.0, 1.0, {false, false, false}, 2, 5);
  Tape tape;
  const auto conv = liconv_forward(f.batch, tape.constant(f.batch.graph.features()), f.conv, KernelKind::mixhop);
  const PoolResult r = pool_forward(f.batch, conv.anchors, conv.out, f.pool);
  Matrix z(8, 12);
  for (int m = 0; m <= 2; ++m) z.middleCols(4 * m, 4) = conv.anchors.slice(m);
  const Matrix expect = (z * f.pool.theta.value).cwiseMax(0.0);
  EXPECT_LE((r.scores.value() - expect).cwiseAbs().maxCoeff(), 1e-13);
  // Without NF, x' = w * z'.
  const Matrix scaled = (conv.out.value().array().colwise() * expect.col(0).array()).matrix();
  EXPECT_LE((r.x.value() - scaled).cwiseAbs().maxCoeff(), 1e-13);
}

TEST(KPool, KeepCountsAndEdgeBoundsPerMember) {
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<std::size_t> size(1, 14);
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<Graph> members;
    for (int m = 0; m < 4; ++m) members.push_back(verify::random_graph(size(rng), 0.5, 2, rng));
    auto f = make_fixture(members, 0.3 + 0.1 * (trial % 7), 0.2 + 0.1 * (trial % 8), {}, 1 + trial % 3, trial);
    Tape tape;
    const auto conv = liconv_forward(f.batch, tape.constant(f.batch.graph.features()), f.conv, KernelKind::chebyshev);
    const PoolResult r = pool_forward(f.batch, conv.anchors, conv.out, f.pool);
    ASSERT_NO_THROW(check_pool_invariants(f.batch, r, f.pool));
    for (std::size_t m = 0; m < 4; ++m) {
      const std::size_t n = f.batch.member_size(m);
      EXPECT_EQ(r.batch.member_size(m), static_cast<std::size_t>(std::ceil(f.pool.rho_v * n - 1e-9)));
      // Edges among the kept nodes before edge pooling.
      std::size_t among = 0;
      for (auto [i, j] : f.batch.graph.edge_list()) {
        if (f.batch.graph_id[i] != m) continue;
        const bool ki = std::binary_search(r.kept_nodes.begin(), r.kept_nodes.end(), i);
        const bool kj = std::binary_search(r.kept_nodes.begin(), r.kept_nodes.end(), j);
        among += ki && kj;
      }
      std::size_t kept = 0;
      for (auto [i, j] : r.kept_edges) kept += r.batch.graph_id[i] == m;
      EXPECT_EQ(kept, keep_count(f.pool.rho_e, among));
    }
  }
}

TEST(KPool, EdgesRankedByDistance) {
  // Star around node 0: leaf distances 1, 3, 2 to the center; keep 2 of 3 edges.
  Matrix x(4, 1);
  x << 0, 1, 3, 2;
  const std::vector<Edge> star{{0, 1}, {0, 2}, {0, 3}};
  const Graph g = Graph::from_edges(4, star, x, 0);
  auto f = make_fixture({g}, 1.0, 0.6, {}, 1, 6);
  Tape tape;
  const auto conv = liconv_forward(f.batch, tape.constant(x), f.conv, KernelKind::chebyshev);
  const PoolResult r = pool_forward(f.batch, conv.anchors, conv.out, f.pool);
  EXPECT_EQ(r.kept_edges, (std::vector<Edge>{{0, 2}, {0, 3}}));
}

TEST(KPool, RatiosValidated) {
  std::mt19937_64 rng(1);
  EXPECT_THROW(KPoolParams::init("p", 4, 2, 0.0, 0.5, {}, rng), ConfigError);
  EXPECT_THROW(KPoolParams::init("p", 4, 2, 0.5, 1.5, {}, rng), ConfigError);
}

// ---- readout and classifier ----

TEST(Readout, MeanThenMax) {
  Matrix x(2, 2);
  x << 1, 2, 3, 0;
  const Graph members[] = {path_graph(2, x)};
  const Batch b = build_batch(members);
  Tape tape;
  EXPECT_EQ(readout(tape.constant(x), b).value(), (Matrix(1, 4) << 2, 1, 3, 2).finished());
}

TEST(Readout, SingletonAndPermutation) {
  std::mt19937_64 rng(12);
  const Matrix x = random_matrix(5, 3, rng);
  const Graph members[] = {path_graph(1, x.topRows(1)), path_graph(4, x.bottomRows(4))};
  const Batch b = build_batch(members);
  Tape tape;
  const Matrix r = readout(tape.constant(x), b).value();
  EXPECT_EQ(r.row(0).head(3), x.row(0));
  EXPECT_EQ(r.row(0).tail(3), x.row(0));
  Matrix shuffled = x;
  shuffled.row(1).swap(shuffled.row(4));
  shuffled.row(2).swap(shuffled.row(3));
  EXPECT_LE((readout(tape.constant(shuffled), b).value() - r).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Classifier, ZeroWeightsGiveLnC) {
  std::mt19937_64 rng(13);
  MlpParams p = MlpParams::init(6, 3, 4, rng);
  for (Parameter* q : {&p.w1, &p.b1, &p.w2, &p.b2}) q->value.setZero();
  Tape tape;
  const Var logits = classifier_forward(tape.constant(random_matrix(5, 6, rng)), p, 0.5, nullptr);
  const std::vector<int> labels{0, 1, 2, 3, 1};
  EXPECT_NEAR(ad::softmax_cross_entropy(logits, labels).value()(0, 0), std::log(4.0), 1e-12);
}

TEST(Classifier, ConfidentLogitLoss) {
  Tape tape;
  const std::vector<int> labels{0};
  const double loss = ad::softmax_cross_entropy(tape.constant((Matrix(1, 2) << 10, -10).finished()), labels)
                          .value()(0, 0);
  EXPECT_NEAR(loss, 2.061153620314381e-09, 1e-16);
}

TEST(Classifier, DropoutOnlyWhenTraining) {
  std::mt19937_64 rng(14);
  MlpParams p = MlpParams::init(6, 16, 2, rng);
  const Matrix h = random_matrix(3, 6, rng);
  Tape tape;
  const Matrix eval1 = classifier_forward(tape.constant(h), p, 0.5, nullptr).value();
  const Matrix eval2 = classifier_forward(tape.constant(h), p, 0.5, nullptr).value();
  EXPECT_EQ(eval1, eval2);
  std::mt19937_64 drop(1);
  EXPECT_NE(classifier_forward(tape.constant(h), p, 0.5, &drop).value(), eval1);
}
