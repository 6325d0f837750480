#include "lightk/verify.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "lightk/kernels.hpp"
#include "lightk/kinfo.hpp"
#include "lightk/layers.hpp"

namespace lightk::verify {

Matrix dense_adjacency(const Graph& g) {
  const auto n = static_cast<Eigen::Index>(g.num_nodes());
  Matrix a = Matrix::Zero(n, n);
  for (auto [i, j] : g.edge_list()) {
    a(i, j) = 1.0;
    a(j, i) = 1.0;
  }
  return a;
}

Matrix dense_scaled_laplacian(const Graph& g, double lambda_max) {
  const Matrix a = dense_adjacency(g);
  const auto n = a.rows();
  Eigen::VectorXd inv_sqrt = Eigen::VectorXd::Zero(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double deg = a.row(i).sum();
    if (deg > 0.0) inv_sqrt(i) = 1.0 / std::sqrt(deg);
  }
  const Matrix identity = Matrix::Identity(n, n);
  const Matrix lap = identity - inv_sqrt.asDiagonal() * a * inv_sqrt.asDiagonal();
  return (2.0 / lambda_max) * lap - identity;
}

Matrix dense_normalized_adjacency(const Graph& g) {
  const Matrix a = dense_adjacency(g) + Matrix::Identity(static_cast<Eigen::Index>(g.num_nodes()),
                                                         static_cast<Eigen::Index>(g.num_nodes()));
  const Eigen::VectorXd inv_sqrt = a.rowwise().sum().array().rsqrt();
  return inv_sqrt.asDiagonal() * a * inv_sqrt.asDiagonal();
}

std::vector<Matrix> dense_chebyshev(const Matrix& op, const Matrix& x, int k) {
  const Matrix identity = Matrix::Identity(op.rows(), op.cols());
  std::vector<Matrix> polys{identity};
  if (k >= 1) polys.push_back(op);
  for (int m = 2; m <= k; ++m) {
    polys.push_back(2.0 * op * polys[static_cast<std::size_t>(m - 1)] - polys[static_cast<std::size_t>(m - 2)]);
  }
  std::vector<Matrix> out;
  for (const Matrix& t : polys) out.push_back(t * x);
  return out;
}

std::vector<Matrix> dense_powers(const Matrix& op, const Matrix& x, int k) {
  Matrix power = Matrix::Identity(op.rows(), op.cols());
  std::vector<Matrix> out{x};
  for (int m = 1; m <= k; ++m) {
    power = power * op;
    out.push_back(power * x);
  }
  return out;
}

double relative_error(const Matrix& a, const Matrix& b) {
  return (a - b).norm() / std::max(b.norm(), 1e-300);
}

Graph random_graph(std::size_t n, double edge_prob, std::size_t features, std::mt19937_64& rng) {
  std::bernoulli_distribution coin(edge_prob);
  std::normal_distribution<double> normal;
  std::vector<Edge> edges;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (coin(rng)) edges.emplace_back(static_cast<NodeId>(i), static_cast<NodeId>(j));
    }
  }
  Matrix x(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(features));
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = normal(rng);
  const int label = std::bernoulli_distribution(0.5)(rng) ? 1 : 0;
  return Graph::from_edges(n, edges, std::move(x), label);
}

namespace {

GradCheck check_parameters(const std::string& name, std::span<Parameter* const> params,
                           const std::function<Var(Tape&)>& loss_fn, double step, double tolerance) {
  for (Parameter* p : params) p->zero_grad();
  {
    Tape tape;
    tape.backward(loss_fn(tape));
  }
  auto loss_value = [&] {
    Tape tape;
    return loss_fn(tape).value()(0, 0);
  };
  GradCheck result{name, 0.0, true};
  for (Parameter* p : params) {
    for (Eigen::Index i = 0; i < p->value.size(); ++i) {
      double& v = p->value.data()[i];
      const double saved = v;
      v = saved + step;
      const double plus = loss_value();
      v = saved - step;
      const double minus = loss_value();
      v = saved;
      const double numeric = (plus - minus) / (2.0 * step);
      const double analytic = p->grad.data()[i];
      const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-3});
      result.max_rel_error = std::max(result.max_rel_error, std::abs(analytic - numeric) / denom);
    }
  }
  result.passed = result.max_rel_error <= tolerance;
  return result;
}

}  // namespace

GradCheck check_gradients(const std::string& name, std::vector<Matrix> inputs, const TapeFunction& f,
                          double step, double tolerance, std::uint64_t seed) {
  std::vector<Parameter> params;
  params.reserve(inputs.size());
  for (std::size_t i = 0; i < inputs.size(); ++i) params.emplace_back("in" + std::to_string(i), std::move(inputs[i]));
  std::vector<Parameter*> ptrs;
  for (auto& p : params) ptrs.push_back(&p);

  Matrix weights;
  auto loss_fn = [&](Tape& tape) {
    std::vector<Var> vars;
    for (auto& p : params) vars.push_back(tape.parameter(p));
    const Var out = f(vars);
    if (weights.size() == 0) {
      std::mt19937_64 rng(seed);
      std::normal_distribution<double> normal;
      weights.resize(out.rows(), out.cols());
      for (Eigen::Index i = 0; i < weights.size(); ++i) weights.data()[i] = normal(rng);
    }
    return ad::sum(ad::mul_const(out, weights));
  };
  return check_parameters(name, ptrs, loss_fn, step, tolerance);
}

GradCheck check_model_gradients(Model& model, const Batch& batch, double step, double tolerance) {
  const auto params = model.parameters();
  auto loss_fn = [&](Tape& tape) {
    return ad::softmax_cross_entropy(model.forward(tape, batch, nullptr).logits, batch.labels);
  };
  return check_parameters("full_network", params, loss_fn, step, tolerance);
}

namespace {

Matrix random_matrix(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = normal(rng);
  return m;
}

Graph small_graph(std::mt19937_64& rng) {
  // Connected 6-node graph: a ring plus a chord, random features.
  const std::vector<Edge> edges{{0, 1}, {1, 2}, {2, 3}, {3, 4}, {4, 5}, {5, 0}, {1, 4}};
  return Graph::from_edges(6, edges, random_matrix(6, 3, rng), 1);
}

}  // namespace

std::vector<GradCheck> op_gradient_checks(double tolerance) {
  std::mt19937_64 rng(2024);
  std::vector<GradCheck> out;
  auto run = [&](const std::string& name, std::vector<Matrix> inputs, const TapeFunction& f) {
    out.push_back(check_gradients(name, std::move(inputs), f, 1e-5, tolerance));
  };
  const Graph g = small_graph(rng);
  const auto lap = std::make_shared<const CsrMatrix>(scaled_laplacian(g));
  const std::vector<std::uint32_t> segments{0, 0, 1, 1, 1, 2};
  const std::vector<std::size_t> rows{4, 0, 0, 2};
  const std::vector<int> labels{1, 0, 2};

  run("matmul", {random_matrix(4, 3, rng), random_matrix(3, 2, rng)},
      [](std::span<const Var> v) { return ad::matmul(v[0], v[1]); });
  run("spmm", {random_matrix(6, 2, rng)}, [&](std::span<const Var> v) { return ad::spmm(lap, v[0]); });
  run("add", {random_matrix(3, 2, rng), random_matrix(3, 2, rng)},
      [](std::span<const Var> v) { return ad::add(v[0], v[1]); });
  run("sub", {random_matrix(3, 2, rng), random_matrix(3, 2, rng)},
      [](std::span<const Var> v) { return ad::sub(v[0], v[1]); });
  run("mul", {random_matrix(3, 2, rng), random_matrix(3, 2, rng)},
      [](std::span<const Var> v) { return ad::mul(v[0], v[1]); });
  run("scale", {random_matrix(3, 2, rng)}, [](std::span<const Var> v) { return ad::scale(v[0], -2.5); });
  run("mul_row", {random_matrix(4, 3, rng), random_matrix(1, 3, rng)},
      [](std::span<const Var> v) { return ad::mul_row(v[0], v[1]); });
  run("add_row", {random_matrix(4, 3, rng), random_matrix(1, 3, rng)},
      [](std::span<const Var> v) { return ad::add_row(v[0], v[1]); });
  run("mul_col", {random_matrix(4, 3, rng), random_matrix(4, 1, rng)},
      [](std::span<const Var> v) { return ad::mul_col(v[0], v[1]); });
  run("relu", {random_matrix(5, 3, rng)}, [](std::span<const Var> v) { return ad::relu(v[0]); });
  run("row_normalize", {random_matrix(5, 3, rng)}, [](std::span<const Var> v) { return ad::row_normalize(v[0]); });
  run("concat_cols", {random_matrix(3, 2, rng), random_matrix(3, 1, rng)},
      [](std::span<const Var> v) { return ad::concat_cols(v); });
  run("gather_rows", {random_matrix(5, 2, rng)}, [&](std::span<const Var> v) { return ad::gather_rows(v[0], rows); });
  run("segment_mean", {random_matrix(6, 3, rng)},
      [&](std::span<const Var> v) { return ad::segment_mean(v[0], segments, 3); });
  run("segment_max", {random_matrix(6, 3, rng)},
      [&](std::span<const Var> v) { return ad::segment_max(v[0], segments, 3); });
  run("mul_const", {random_matrix(3, 3, rng)},
      [mask = random_matrix(3, 3, rng)](std::span<const Var> v) { return ad::mul_const(v[0], mask); });
  run("sum", {random_matrix(3, 4, rng)}, [](std::span<const Var> v) { return ad::sum(v[0]); });
  run("softmax_cross_entropy", {random_matrix(3, 3, rng)},
      [&](std::span<const Var> v) { return ad::softmax_cross_entropy(v[0], labels); });

  // Layer-level compositions: the anchors and conv outputs through both kernels.
  for (KernelKind kind : {KernelKind::chebyshev, KernelKind::mixhop}) {
    const PropagationPlan plan = PropagationPlan::build(g, kind, 3);
    run(std::string("liconv_") + std::string(to_string(kind)),
        {random_matrix(6, 3, rng), random_matrix(3, 4, rng), random_matrix(4, 4, rng), random_matrix(1, 4, rng)},
        [&](std::span<const Var> v) {
          std::vector<Var> hops{ad::matmul(v[0], v[1])};
          for (int m = 1; m <= 3; ++m) {
            const Var next = ad::spmm(plan.shared_op(), hops.back());
            hops.push_back(kind == KernelKind::mixhop || m == 1
                               ? next
                               : ad::sub(ad::scale(next, 2.0), hops[static_cast<std::size_t>(m - 2)]));
          }
          Var acc;
          for (std::size_t m = 0; m < hops.size(); ++m) {
            const std::size_t r[] = {m};
            const Var term = ad::mul_row(hops[m], ad::gather_rows(v[2], r));
            acc = m == 0 ? term : ad::add(acc, term);
          }
          return ad::add_row(acc, v[3]);
        });
  }
  return out;
}

namespace {

std::string format_error(double e) {
  std::ostringstream s;
  s.precision(3);
  s << "max error " << e;
  return s.str();
}

CheckResult kernel_equivalence() {
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<std::size_t> size(1, 12);
  std::uniform_int_distribution<int> order(0, 5);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const Graph g = random_graph(size(rng), 0.4, 3, rng);
    const int k = order(rng);
    const Matrix& x = g.features();
    const auto cheb = cheb_propagate(PropagationPlan::build(g, KernelKind::chebyshev, k), x);
    const auto cheb_ref = dense_chebyshev(dense_scaled_laplacian(g), x, k);
    const auto mix = mixhop_propagate(PropagationPlan::build(g, KernelKind::mixhop, k), x);
    const auto mix_ref = dense_powers(dense_normalized_adjacency(g), x, k);
    for (int m = 0; m <= k; ++m) {
      worst = std::max(worst, relative_error(cheb[static_cast<std::size_t>(m)], cheb_ref[static_cast<std::size_t>(m)]));
      worst = std::max(worst, relative_error(mix[static_cast<std::size_t>(m)], mix_ref[static_cast<std::size_t>(m)]));
    }
  }
  return {"kernels_vs_dense", worst <= 1e-10, format_error(worst)};
}

CheckResult pooling_keep_counts() {
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<std::size_t> size(1, 15);
  for (double rho_v : {0.3, 0.6, 1.0}) {
    for (double rho_e : {0.4, 0.8, 1.0}) {
      std::vector<Graph> members;
      for (int m = 0; m < 5; ++m) members.push_back(random_graph(size(rng), 0.4, 3, rng));
      const Batch batch = build_batch(members);
      LiConvParams conv = LiConvParams::init("c", 3, 4, 2, rng);
      KPoolParams pool = KPoolParams::init("p", 4, 2, rho_v, rho_e, PoolFlags{}, rng);
      Tape tape;
      const Var x = tape.constant(batch.graph.features());
      const ConvOutput co = liconv_forward(batch, x, conv, KernelKind::chebyshev);
      const PoolResult pr = pool_forward(batch, co.anchors, co.out, pool);
      try {
        check_pool_invariants(batch, pr, pool);
      } catch (const std::exception& e) {
        return {"pooling_keep_counts", false, e.what()};
      }
      for (std::size_t m = 0; m < batch.num_graphs(); ++m) {
        const std::size_t expect = std::max<std::size_t>(
            1, static_cast<std::size_t>(std::ceil(rho_v * static_cast<double>(batch.member_size(m)) - 1e-9)));
        if (pr.batch.member_size(m) != expect) {
          return {"pooling_keep_counts", false, "member " + std::to_string(m) + " kept " +
                                                    std::to_string(pr.batch.member_size(m))};
        }
      }
    }
  }
  return {"pooling_keep_counts", true, "9 ratio pairs x 5 members"};
}

CheckResult entropy_trivia() {
  // Graph 0: star with four identical values around node 0, plus an
  // isolated node 4. Graph 1 carries other values so the channel varies.
  Matrix x0(5, 1);
  x0 << 1.0, 1.0, 1.0, 1.0, 3.0;
  const std::vector<Edge> star{{0, 1}, {0, 2}, {0, 3}};
  Matrix x1(5, 1);
  x1 << 0.2, -1.0, 2.5, 0.7, 1.9;
  std::vector<Edge> k5;
  for (NodeId i = 0; i < 5; ++i) {
    for (NodeId j = i + 1; j < 5; ++j) k5.emplace_back(i, j);
  }
  Dataset ds;
  ds.name = "trivia";
  ds.num_features = 1;
  ds.num_classes = 2;
  ds.graphs.push_back(Graph::from_edges(5, star, x0, 0));
  ds.graphs.push_back(Graph::from_edges(5, k5, x1, 1));
  const EntropyTable table = local_entropy(ds, 4);

  double worst = std::abs(table.at(0, 0, 1) - std::log(4.0));
  for (int k = 0; k <= 4; ++k) worst = std::max(worst, std::abs(table.at(4, 0, k)));
  for (std::size_t row = 5; row < 10; ++row) {
    for (int k = 2; k <= 4; ++k) worst = std::max(worst, std::abs(table.at(row, 0, k) - table.at(row, 0, 1)));
  }
  return {"entropy_trivia", worst <= 1e-12, format_error(worst)};
}

}  // namespace

std::vector<CheckResult> run_suite() {
  std::vector<CheckResult> results;
  results.push_back(kernel_equivalence());
  for (const GradCheck& g : op_gradient_checks()) {
    results.push_back({"grad_" + g.name, g.passed, format_error(g.max_rel_error)});
  }
  {
    std::mt19937_64 rng(3);
    const Graph g = random_graph(6, 0.5, 3, rng);
    const Graph members[] = {g};
    TrainConfig cfg = default_config("PROTEINS");
    cfg.layers = 2;
    cfg.hidden = 4;
    cfg.k = 2;
    Model model(cfg, 3, 2, 5);
    const GradCheck full = check_model_gradients(model, build_batch(members));
    results.push_back({"grad_full_network", full.passed, format_error(full.max_rel_error)});
  }
  results.push_back(pooling_keep_counts());
  results.push_back(entropy_trivia());
  return results;
}

}  // namespace lightk::verify
