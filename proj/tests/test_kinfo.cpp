#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <sstream>

#include "lightk/errors.hpp"
#include "lightk/kde.hpp"
#include "lightk/kinfo.hpp"
#include "lightk/verify.hpp"
#include "support.hpp"

using namespace lightk;
using lightk::testing::complete_graph;

TEST(Kde, SymmetricAroundMidpoint) {
  const std::vector<double> s{0.0, 1.0};
  const KdeModel kde = fit_kde(s);
  for (double t : {0.0, 0.1, 0.37, 1.0, 2.5}) EXPECT_DOUBLE_EQ(kde.density(0.5 - t), kde.density(0.5 + t));
}

TEST(Kde, StandardNormalAtZero) {
  std::mt19937_64 rng(1234);
  std::normal_distribution<double> normal;
  std::vector<double> s(1000);
  for (double& v : s) v = normal(rng);
  const KdeModel kde = fit_kde(s);
  EXPECT_NEAR(kde.density(0.0), 0.3989, 0.2 * 0.3989);
}

TEST(Kde, IntegratesToOne) {
  std::mt19937_64 rng(77);
  std::gamma_distribution<double> gamma(2.0, 1.5);
  std::vector<double> s(500);
  for (double& v : s) v = gamma(rng);
  const KdeModel kde = fit_kde(s);
  const double lo = kde.min() - 5 * kde.bandwidth();
  const double hi = kde.max() + 5 * kde.bandwidth();
  const int n = 20001;
  std::vector<double> xs(n);
  for (int i = 0; i < n; ++i) xs[i] = lo + (hi - lo) * i / (n - 1);
  const auto d = kde.density_sorted(xs);
  double integral = 0.0;
  for (int i = 1; i < n; ++i) integral += 0.5 * (d[i] + d[i - 1]) * (xs[i] - xs[i - 1]);
  EXPECT_NEAR(integral, 1.0, 0.01);
  for (int i = 0; i < n; i += 997) EXPECT_DOUBLE_EQ(d[i], kde.density(xs[i]));
}

TEST(Kde, BandwidthRuleAndFloors) {
  const std::vector<double> s{1.0, 2.0, 3.0, 4.0};
  const double sigma = std::sqrt(5.0 / 3.0);
  EXPECT_NEAR(fit_kde(s).bandwidth(), sigma * std::pow(4.0, -0.2), 1e-15);
  const std::vector<double> same{5.0, 5.0, 5.0};
  const KdeModel deg = fit_kde(same);
  EXPECT_TRUE(deg.degenerate());
  EXPECT_DOUBLE_EQ(deg.bandwidth(), 5e-3);
  EXPECT_DOUBLE_EQ(fit_kde(s).density(1e6), KdeModel::kDensityFloor);
  const std::vector<double> one{1.0};
  EXPECT_THROW(fit_kde(one), ArgumentError);
}

TEST(Kde, KlProperties) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> normal;
  std::vector<double> a(300), b(300);
  for (double& v : a) v = normal(rng);
  for (double& v : b) v = 1.0 + normal(rng);
  const KdeModel p = fit_kde(a);
  const KdeModel q = fit_kde(b);
  EXPECT_NEAR(kl_divergence(p, p), 0.0, 1e-12);
  const double kl = kl_divergence(p, q);
  // Two unit normals one apart: KL = 0.5; KDE smoothing leaves it near that.
  EXPECT_GT(kl, 0.3);
  EXPECT_LT(kl, 0.7);
}

namespace {

Dataset random_dataset(std::size_t graphs, std::size_t features, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> size(4, 14);
  Dataset ds;
  ds.name = "random";
  ds.num_features = features;
  ds.num_classes = 2;
  for (std::size_t g = 0; g < graphs; ++g) ds.graphs.push_back(verify::random_graph(size(rng), 0.3, features, rng));
  return ds;
}

}  // namespace

TEST(LocalEntropy, UniformNeighborhoodIsLnFour) {
  Matrix x0(5, 1);
  x0 << 2.0, 2.0, 2.0, 2.0, -1.0;
  Matrix x1(3, 1);
  x1 << 0.0, 0.5, 4.0;
  Dataset ds;
  ds.num_features = 1;
  ds.num_classes = 1;
  const std::vector<Edge> star{{0, 1}, {0, 2}, {0, 3}};
  ds.graphs.push_back(Graph::from_edges(5, star, x0, 0));
  ds.graphs.push_back(lightk::testing::path_graph(3, x1));
  const EntropyTable t = local_entropy(ds, 3);
  EXPECT_NEAR(t.at(0, 0, 1), std::log(4.0), 1e-12);
  EXPECT_EQ(t.neighborhood_size(0, 1), 4u);
  for (int k = 0; k <= 3; ++k) {
    EXPECT_EQ(t.at(4, 0, k), 0.0);  // isolated node
    EXPECT_EQ(t.at(0, 0, 0), 0.0);
  }
}

TEST(LocalEntropy, CompleteGraphSaturates) {
  std::mt19937_64 rng(3);
  Dataset ds;
  ds.num_features = 2;
  ds.num_classes = 1;
  for (std::size_t n : {3u, 5u, 6u}) ds.graphs.push_back(complete_graph(n, lightk::testing::random_matrix(n, 2, rng)));
  const EntropyTable t = local_entropy(ds, 4);
  for (std::size_t r = 0; r < t.rows(); ++r) {
    for (std::size_t c = 0; c < 2; ++c) {
      for (int k = 2; k <= 4; ++k) EXPECT_EQ(t.at(r, c, k), t.at(r, c, 1));
    }
  }
  const IgCurve curve = ig_curve(t, 4);
  EXPECT_EQ(curve.ig[0], 0.0);
  for (int k = 2; k <= 4; ++k) EXPECT_NEAR(curve.ig[k], 0.0, 1e-9);
  EXPECT_THROW(fit_exponential(curve, 2, 4), FitError);
}

TEST(LocalEntropy, EntropyBoundAndMonotoneSizes) {
  const Dataset ds = random_dataset(20, 2, 8);
  const EntropyTable t = local_entropy(ds, 4);
  for (std::size_t r = 0; r < t.rows(); ++r) {
    for (int k = 0; k <= 4; ++k) {
      if (k > 0) EXPECT_GE(t.neighborhood_size(r, k), t.neighborhood_size(r, k - 1));
      for (std::size_t c = 0; c < 2; ++c) {
        EXPECT_GE(t.at(r, c, k), 0.0);
        EXPECT_LE(t.at(r, c, k), std::log(double(t.neighborhood_size(r, k))) + 1e-12);
      }
    }
  }
}

TEST(LocalEntropy, PermutationInvariant) {
  std::mt19937_64 rng(14);
  const Graph g = verify::random_graph(10, 0.35, 2, rng);
  std::vector<NodeId> perm(10);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  Dataset a, b;
  a.num_features = b.num_features = 2;
  a.num_classes = b.num_classes = 2;
  a.graphs.push_back(g);
  b.graphs.push_back(lightk::testing::permute(g, perm));
  const EntropyTable ta = local_entropy(a, 3);
  const EntropyTable tb = local_entropy(b, 3);
  for (std::size_t i = 0; i < 10; ++i) {
    for (std::size_t c = 0; c < 2; ++c) {
      for (int k = 0; k <= 3; ++k) EXPECT_NEAR(ta.at(i, c, k), tb.at(perm[i], c, k), 1e-12);
    }
  }
}

TEST(LocalEntropy, DegenerateChannelsExcluded) {
  Dataset ds = random_dataset(10, 1, 2);
  for (auto& g : ds.graphs) {
    Matrix x(g.num_nodes(), 2);
    x.col(0) = g.features().col(0);
    x.col(1).setConstant(3.0);
    g = g.with_features(x);
  }
  ds.num_features = 2;
  const EntropyTable t = local_entropy(ds, 3);
  EXPECT_FALSE(t.degenerate(0));
  EXPECT_TRUE(t.degenerate(1));
  EXPECT_EQ(t.informative_channels(), 1u);
  EXPECT_EQ(ig_curve(t, 3).channels, (std::vector<std::size_t>{0}));
}

TEST(LocalEntropy, ConstantFeaturesRejected) {
  Dataset ds;
  ds.num_features = 1;
  ds.num_classes = 1;
  ds.graphs.push_back(complete_graph(4));
  const EntropyTable t = local_entropy(ds, 2);
  EXPECT_THROW(ig_curve(t, 2), ArgumentError);
  EXPECT_THROW(local_entropy(ds, 0), ArgumentError);
}

TEST(LocalEntropy, DistinctValuesMode) {
  Matrix x(3, 1);
  x << 1.0, 1.0, 2.0;
  Dataset ds;
  ds.num_features = 1;
  ds.num_classes = 1;
  ds.graphs.push_back(lightk::testing::path_graph(3, x));
  KinfoOptions opts;
  opts.distinct_values = true;
  const EntropyTable set_table = local_entropy(ds, 1, opts);
  const EntropyTable multi_table = local_entropy(ds, 1);
  EXPECT_EQ(set_table.at(0, 0, 1), 0.0);  // {1, 1} collapses to one value
  EXPECT_NEAR(multi_table.at(0, 0, 1), std::log(2.0), 1e-12);
}

TEST(LocalEntropy, NodeCapSubsamples) {
  const Dataset ds = random_dataset(30, 1, 6);
  KinfoOptions opts;
  opts.node_cap = 50;
  const EntropyTable t = local_entropy(ds, 2, opts);
  EXPECT_EQ(t.rows(), 50u);
  const EntropyTable again = local_entropy(ds, 2, opts);
  for (std::size_t r = 0; r < t.rows(); ++r) EXPECT_EQ(t.at(r, 0, 2), again.at(r, 0, 2));
}

TEST(IgCurve, NonnegativeOnRandomData) {
  const Dataset ds = random_dataset(40, 2, 11);
  const IgCurve curve = ig_curve(local_entropy(ds, 5), 5);
  ASSERT_EQ(curve.k_max(), 5);
  EXPECT_EQ(curve.ig[0], 0.0);
  for (double v : curve.ig) EXPECT_GE(v, 0.0);
  for (const auto& kl : curve.channel_kl) {
    for (std::size_t k = 1; k < kl.size(); ++k) EXPECT_GE(kl[k], -1e-9);
  }
}

namespace {

IgCurve curve_from(const std::function<double(int)>& f, int k_max) {
  IgCurve c;
  c.ig.push_back(0.0);
  for (int k = 1; k <= k_max; ++k) c.ig.push_back(f(k));
  return c;
}

}  // namespace

TEST(FitExponential, ExactModelRecovery) {
  const IgCurve c = curve_from([](int k) { return 2.0 * std::exp(-k); }, 10);
  const ExpFit fit = fit_exponential(c, 1, 10);
  EXPECT_NEAR(fit.a, 2.0, 1e-10);
  EXPECT_NEAR(fit.b, 1.0, 1e-10);
  EXPECT_NEAR(fit.r2, 1.0, 1e-10);
  EXPECT_NEAR(fit.mse, 0.0, 1e-10);
  EXPECT_EQ(fit.used_k.size(), 10u);
}

TEST(FitExponential, PerturbedSlope) {
  std::mt19937_64 rng(19);
  std::uniform_real_distribution<double> delta(-1e-3, 1e-3);
  const IgCurve c = curve_from([&](int k) { return 5.0 * std::exp(-2.0 * k) * (1.0 + delta(rng)); }, 10);
  EXPECT_NEAR(fit_exponential(c).b, 2.0, 1e-2);
}

TEST(FitExponential, ScaleInvariantSlope) {
  const IgCurve c = curve_from([](int k) { return 3.0 * std::exp(-0.7 * k) + 0.01 / k; }, 10);
  const IgCurve scaled = curve_from([&](int k) { return 40.0 * c.ig[k]; }, 10);
  const ExpFit f1 = fit_exponential(c);
  const ExpFit f2 = fit_exponential(scaled);
  EXPECT_NEAR(f1.b, f2.b, 1e-12);
  EXPECT_NEAR(f2.a / f1.a, 40.0, 1e-9);
  EXPECT_EQ(select_k(f1, 0.05).k_hat, select_k(f2, 0.05).k_hat);
}

TEST(FitExponential, SkipsNonPositivePoints) {
  IgCurve c = curve_from([](int k) { return std::exp(-0.5 * k); }, 10);
  c.ig[4] = 0.0;
  const ExpFit fit = fit_exponential(c);
  EXPECT_EQ(fit.used_k.size(), 8u);
  EXPECT_NEAR(fit.b, 0.5, 1e-12);
  IgCurve sparse = curve_from([](int) { return 0.0; }, 10);
  sparse.ig[2] = 1.0;
  sparse.ig[3] = 0.5;
  EXPECT_THROW(fit_exponential(sparse), FitError);
}

TEST(SelectK, ReferenceSlope) {
  const KSelection s = select_k(1.2501, 0.05);
  EXPECT_EQ(s.k_hat, 3);
  EXPECT_NEAR(s.loss, 0.0235, 0.0005);
  EXPECT_DOUBLE_EQ(s.loss, std::exp(-3 * 1.2501));
}

TEST(SelectK, ExactBoundary) {
  EXPECT_EQ(select_k(std::log(10.0), 0.1).k_hat, 1);
  EXPECT_EQ(select_k(std::log(2.0), 0.5).k_hat, 1);
  EXPECT_EQ(select_k(3.0, 0.5).k_hat, 1);
}

TEST(SelectK, MonotoneInEpsilon) {
  for (double b : {0.1, 0.5, 1.2501, 3.0}) {
    int prev = 1 << 30;
    for (double eps = 0.001; eps < 1.0; eps += 0.01) {
      const int k = select_k(b, eps).k_hat;
      EXPECT_LE(k, prev);
      EXPECT_LE(std::exp(-b * k), eps * (1 + 1e-12));
      prev = k;
    }
  }
}

TEST(SelectK, RejectsBadArguments) {
  EXPECT_THROW(select_k(1.0, 0.0), ArgumentError);
  EXPECT_THROW(select_k(1.0, 1.0), ArgumentError);
  EXPECT_THROW(select_k(0.0, 0.1), ArgumentError);
}

TEST(KinfoCsv, Layout) {
  const IgCurve c = curve_from([](int k) { return 2.0 * std::exp(-k); }, 3);
  std::ostringstream ig;
  write_ig_csv(ig, c);
  const std::string text = ig.str();
  EXPECT_EQ(text.substr(0, 5), "k,ig\n");
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 5);
  std::ostringstream fit;
  const ExpFit f = fit_exponential(c, 1, 3);
  write_fit_csv(fit, "X", f, select_k(f, 0.05), 0.05);
  EXPECT_EQ(fit.str().substr(0, fit.str().find('\n')), "dataset,a,b,r2,mse,k_hat,epsilon,loss_achieved");
  EXPECT_NE(fit.str().find("\nX,"), std::string::npos);
}
