#include "lightk/layers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "lightk/errors.hpp"

namespace lightk {

Matrix glorot_uniform(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
  std::uniform_real_distribution<double> unif(-limit, limit);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = unif(rng);
  return m;
}

LiConvParams LiConvParams::init(const std::string& prefix, std::size_t in, std::size_t out, int k,
                                std::mt19937_64& rng) {
  if (k < 0) throw ConfigError("LiConv: order k must be >= 0");
  const auto d = static_cast<Eigen::Index>(in);
  const auto dp = static_cast<Eigen::Index>(out);
  LiConvParams p;
  p.weight = Parameter(prefix + ".weight", glorot_uniform(d, dp, rng));
  p.merge = Parameter(prefix + ".merge", Matrix::Ones(k + 1, dp));
  p.bias = Parameter(prefix + ".bias", Matrix::Zero(1, dp));
  p.k = k;
  return p;
}

ConvOutput liconv_forward(const PropagationPlan& plan, const Var& x, LiConvParams& params) {
  if (static_cast<std::size_t>(x.cols()) != params.in_features()) {
    throw ShapeError("liconv_forward: input has " + std::to_string(x.cols()) + " channels, layer expects " +
                     std::to_string(params.in_features()));
  }
  if (plan.order() != params.k) throw ShapeError("liconv_forward: plan order differs from layer order");
  if (static_cast<std::size_t>(x.rows()) != plan.op().size) {
    throw ShapeError("liconv_forward: plan built for a different node count");
  }
  Tape& tape = x.tape();
  const Var w = tape.parameter(params.weight);
  const Var merge = tape.parameter(params.merge);
  const Var bias = tape.parameter(params.bias);

  ConvOutput out;
  auto& hops = out.anchors.hops;
  hops.push_back(ad::matmul(x, w));
  const auto op = plan.shared_op();
  for (int m = 1; m <= params.k; ++m) {
    const Var prev = hops.back();
    if (plan.kind() == KernelKind::mixhop) {
      hops.push_back(ad::spmm(op, prev));
    } else if (m == 1) {
      hops.push_back(ad::spmm(op, prev));
    } else {
      hops.push_back(ad::sub(ad::scale(ad::spmm(op, prev), 2.0), hops[static_cast<std::size_t>(m - 2)]));
    }
  }

  Var acc;
  for (int m = 0; m <= params.k; ++m) {
    const std::size_t row[] = {static_cast<std::size_t>(m)};
    const Var term = ad::mul_row(hops[static_cast<std::size_t>(m)], ad::gather_rows(merge, row));
    acc = m == 0 ? term : ad::add(acc, term);
  }
  out.out = ad::add_row(acc, bias);
  return out;
}

ConvOutput liconv_forward(const Batch& batch, const Var& x, LiConvParams& params, KernelKind kernel) {
  return liconv_forward(PropagationPlan::build(batch.graph, kernel, params.k), x, params);
}

KPoolParams KPoolParams::init(const std::string& prefix, std::size_t hidden, int k, double rho_v,
                              double rho_e, PoolFlags flags, std::mt19937_64& rng) {
  if (!(rho_v > 0.0 && rho_v <= 1.0) || !(rho_e > 0.0 && rho_e <= 1.0)) {
    throw ConfigError("KPool: keep ratios must lie in (0, 1]");
  }
  KPoolParams p;
  p.theta = Parameter(prefix + ".theta",
                      glorot_uniform(static_cast<Eigen::Index>(k + 1) * static_cast<Eigen::Index>(hidden), 1, rng));
  p.rho_v = rho_v;
  p.rho_e = rho_e;
  p.flags = flags;
  return p;
}

std::size_t keep_count(double ratio, std::size_t count) {
  const double raw = std::ceil(ratio * static_cast<double>(count) - 1e-9);
  return std::min(count, static_cast<std::size_t>(std::max(raw, 0.0)));
}

std::vector<double> edge_scores(const Matrix& x, std::span<const Edge> edges) {
  std::vector<double> out;
  out.reserve(edges.size());
  for (auto [i, j] : edges) out.push_back(std::exp((x.row(i) - x.row(j)).norm()));
  return out;
}

PoolResult pool_forward(const Batch& batch, const AnchorStack& anchors, const Var& conv_out,
                        KPoolParams& params) {
  const std::size_t n = batch.graph.num_nodes();
  const auto concat_width = static_cast<Eigen::Index>(anchors.hops.size()) * conv_out.cols();
  if (params.theta.value.rows() != concat_width) {
    throw ShapeError("pool_forward: theta has " + std::to_string(params.theta.value.rows()) +
                     " entries, concatenated anchors have " + std::to_string(concat_width));
  }
  if (static_cast<std::size_t>(conv_out.rows()) != n) throw ShapeError("pool_forward: row count mismatch");
  Tape& tape = conv_out.tape();

  PoolResult result;
  const Var theta = tape.parameter(params.theta);
  result.scores = ad::relu(ad::matmul(ad::concat_cols(anchors.hops), theta));
  const Var base = params.flags.normalize ? ad::row_normalize(conv_out) : conv_out;
  const Var scaled = ad::mul_col(base, result.scores);

  // Node selection per member graph.
  const Matrix& s = result.scores.value();
  std::vector<std::size_t> new_offsets{0};
  for (std::size_t m = 0; m < batch.num_graphs(); ++m) {
    const std::size_t lo = batch.offsets[m];
    const std::size_t size = batch.member_size(m);
    std::vector<std::size_t> members(size);
    std::iota(members.begin(), members.end(), lo);
    if (params.flags.nodes) {
      const std::size_t keep = std::max<std::size_t>(1, keep_count(params.rho_v, size));
      std::stable_sort(members.begin(), members.end(), [&](std::size_t a, std::size_t b) {
        return s(static_cast<Eigen::Index>(a), 0) > s(static_cast<Eigen::Index>(b), 0);
      });
      members.resize(std::min(keep, size));
      std::sort(members.begin(), members.end());
    }
    result.kept_nodes.insert(result.kept_nodes.end(), members.begin(), members.end());
    new_offsets.push_back(result.kept_nodes.size());
  }

  constexpr auto dropped = std::numeric_limits<NodeId>::max();
  std::vector<NodeId> remap(n, dropped);
  for (std::size_t r = 0; r < result.kept_nodes.size(); ++r) remap[result.kept_nodes[r]] = static_cast<NodeId>(r);

  // Edge selection per member graph among edges whose endpoints survived.
  const Matrix& edge_x = batch.graph.features();
  for (std::size_t m = 0; m < batch.num_graphs(); ++m) {
    std::vector<Edge> candidates;
    for (std::size_t i = batch.offsets[m]; i < batch.offsets[m + 1]; ++i) {
      if (remap[i] == dropped) continue;
      for (NodeId j : batch.graph.neighbors(static_cast<NodeId>(i))) {
        if (j > i && remap[j] != dropped) candidates.emplace_back(static_cast<NodeId>(i), j);
      }
    }
    if (params.flags.edges && !candidates.empty()) {
      // Ranking by distance is the same as ranking by exp(distance) and cannot overflow.
      std::vector<double> dist(candidates.size());
      for (std::size_t e = 0; e < candidates.size(); ++e) {
        dist[e] = (edge_x.row(candidates[e].first) - edge_x.row(candidates[e].second)).norm();
      }
      std::vector<std::size_t> order(candidates.size());
      std::iota(order.begin(), order.end(), std::size_t{0});
      std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return dist[a] > dist[b]; });
      order.resize(keep_count(params.rho_e, candidates.size()));
      std::sort(order.begin(), order.end());
      std::vector<Edge> kept;
      kept.reserve(order.size());
      for (std::size_t e : order) kept.push_back(candidates[e]);
      candidates = std::move(kept);
    }
    for (auto [i, j] : candidates) result.kept_edges.emplace_back(remap[i], remap[j]);
  }

  result.x = ad::gather_rows(scaled, result.kept_nodes);

  Batch& out = result.batch;
  out.offsets = std::move(new_offsets);
  out.labels = batch.labels;
  out.graph_id.reserve(result.kept_nodes.size());
  for (std::size_t node : result.kept_nodes) out.graph_id.push_back(batch.graph_id[node]);
  out.graph = Graph::from_edges(result.kept_nodes.size(), result.kept_edges, result.x.value(), 0);
  return result;
}

void check_pool_invariants(const Batch& before, const PoolResult& result, const KPoolParams& params) {
  const Batch& after = result.batch;
  if (after.num_graphs() != before.num_graphs()) throw std::logic_error("pooling changed the member count");
  for (std::size_t m = 0; m < before.num_graphs(); ++m) {
    const std::size_t n_before = before.member_size(m);
    const std::size_t expect =
        params.flags.nodes ? std::max<std::size_t>(1, keep_count(params.rho_v, n_before)) : n_before;
    if (after.member_size(m) != std::min(expect, n_before)) {
      throw std::logic_error("pooling kept " + std::to_string(after.member_size(m)) + " nodes of member " +
                             std::to_string(m) + ", expected " + std::to_string(expect));
    }
    if (n_before > 0 && after.member_size(m) == 0) throw std::logic_error("pooling emptied a member graph");
  }
  for (auto [i, j] : result.kept_edges) {
    if (i >= after.graph.num_nodes() || j >= after.graph.num_nodes()) {
      throw std::logic_error("pooled edge references a dropped node");
    }
    if (after.graph_id[i] != after.graph_id[j]) throw std::logic_error("pooled edge crosses member graphs");
  }
  // Edge budget per member: |E'| <= ceil(rho_e * edges among kept nodes).
  if (params.flags.edges) {
    std::vector<std::size_t> candidates(before.num_graphs(), 0);
    std::vector<bool> kept(before.graph.num_nodes(), false);
    for (std::size_t v : result.kept_nodes) kept[v] = true;
    for (const auto& [i, j] : before.graph.edge_list()) {
      if (kept[i] && kept[j]) ++candidates[before.graph_id[i]];
    }
    std::vector<std::size_t> actual(before.num_graphs(), 0);
    for (auto [i, j] : result.kept_edges) ++actual[after.graph_id[i]];
    for (std::size_t m = 0; m < before.num_graphs(); ++m) {
      if (actual[m] > keep_count(params.rho_e, candidates[m])) {
        throw std::logic_error("pooling kept too many edges in member " + std::to_string(m));
      }
    }
  }
}

Var readout(const Var& x, const Batch& batch) {
  const Var parts[] = {ad::segment_mean(x, batch.graph_id, batch.num_graphs()),
                       ad::segment_max(x, batch.graph_id, batch.num_graphs())};
  return ad::concat_cols(parts);
}

MlpParams MlpParams::init(std::size_t in, std::size_t hidden, std::size_t classes, std::mt19937_64& rng) {
  const auto i = static_cast<Eigen::Index>(in);
  const auto h = static_cast<Eigen::Index>(hidden);
  const auto c = static_cast<Eigen::Index>(classes);
  MlpParams p;
  p.w1 = Parameter("classifier.w1", glorot_uniform(i, h, rng));
  p.b1 = Parameter("classifier.b1", Matrix::Zero(1, h));
  p.w2 = Parameter("classifier.w2", glorot_uniform(h, c, rng));
  p.b2 = Parameter("classifier.b2", Matrix::Zero(1, c));
  return p;
}

Var classifier_forward(const Var& h, MlpParams& params, double dropout, std::mt19937_64* rng) {
  Tape& tape = h.tape();
  Var hidden = ad::relu(ad::add_row(ad::matmul(h, tape.parameter(params.w1)), tape.parameter(params.b1)));
  if (rng != nullptr && dropout > 0.0) {
    std::bernoulli_distribution keep(1.0 - dropout);
    Matrix mask(hidden.rows(), hidden.cols());
    const double scale = 1.0 / (1.0 - dropout);
    for (Eigen::Index i = 0; i < mask.size(); ++i) mask.data()[i] = keep(*rng) ? scale : 0.0;
    hidden = ad::mul_const(hidden, std::move(mask));
  }
  return ad::add_row(ad::matmul(hidden, tape.parameter(params.w2)), tape.parameter(params.b2));
}

}  // namespace lightk
