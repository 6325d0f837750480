#include "lightk/graph.hpp"

#include <algorithm>
#include <numeric>
#include <random>

#include "lightk/errors.hpp"

namespace lightk {

Graph::Graph(std::size_t num_nodes, std::vector<std::size_t> row_ptr,
             std::vector<NodeId> col_idx, Matrix features, int label)
    : num_nodes_(num_nodes),
      row_ptr_(std::move(row_ptr)),
      col_idx_(std::move(col_idx)),
      features_(std::move(features)),
      label_(label) {
  if (row_ptr_.size() != num_nodes_ + 1 || row_ptr_.front() != 0 ||
      row_ptr_.back() != col_idx_.size()) {
    throw ValidationError("graph: malformed row pointer array");
  }
  if (static_cast<std::size_t>(features_.rows()) != num_nodes_) {
    throw ValidationError("graph: feature matrix has " + std::to_string(features_.rows()) +
                          " rows, expected " + std::to_string(num_nodes_));
  }
  for (std::size_t i = 0; i < num_nodes_; ++i) {
    if (row_ptr_[i] > row_ptr_[i + 1]) throw ValidationError("graph: decreasing row pointer");
    for (std::size_t p = row_ptr_[i]; p < row_ptr_[i + 1]; ++p) {
      const NodeId j = col_idx_[p];
      if (j >= num_nodes_) {
        throw ValidationError("graph: node index " + std::to_string(j) + " out of range");
      }
      if (j == i) throw ValidationError("graph: self-loop at node " + std::to_string(i));
      if (p > row_ptr_[i] && col_idx_[p - 1] >= j) {
        throw ValidationError("graph: neighbor list of node " + std::to_string(i) +
                              " not strictly ascending");
      }
    }
  }
  for (std::size_t i = 0; i < num_nodes_; ++i) {
    for (NodeId j : neighbors(static_cast<NodeId>(i))) {
      auto nb = neighbors(j);
      if (!std::binary_search(nb.begin(), nb.end(), static_cast<NodeId>(i))) {
        throw ValidationError("graph: edge (" + std::to_string(i) + "," + std::to_string(j) +
                              ") has no reverse entry");
      }
    }
  }
}

Graph Graph::from_edges(std::size_t num_nodes, std::span<const Edge> edges, Matrix features,
                        int label) {
  std::vector<Edge> directed;
  directed.reserve(edges.size() * 2);
  for (auto [u, v] : edges) {
    if (u >= num_nodes || v >= num_nodes) {
      throw ValidationError("graph: edge (" + std::to_string(u) + "," + std::to_string(v) +
                            ") references a node >= " + std::to_string(num_nodes));
    }
    if (u == v) throw ValidationError("graph: self-loop at node " + std::to_string(u));
    directed.emplace_back(u, v);
    directed.emplace_back(v, u);
  }
  std::sort(directed.begin(), directed.end());
  directed.erase(std::unique(directed.begin(), directed.end()), directed.end());

  std::vector<std::size_t> row_ptr(num_nodes + 1, 0);
  std::vector<NodeId> col;
  col.reserve(directed.size());
  for (auto [u, v] : directed) {
    ++row_ptr[u + 1];
    col.push_back(v);
  }
  std::partial_sum(row_ptr.begin(), row_ptr.end(), row_ptr.begin());
  return Graph(num_nodes, std::move(row_ptr), std::move(col), std::move(features), label);
}

std::vector<Edge> Graph::edge_list() const {
  std::vector<Edge> out;
  out.reserve(num_edges());
  for (std::size_t i = 0; i < num_nodes_; ++i) {
    for (NodeId j : neighbors(static_cast<NodeId>(i))) {
      if (i < j) out.emplace_back(static_cast<NodeId>(i), j);
    }
  }
  return out;
}

Graph Graph::with_features(Matrix features) const {
  return Graph(num_nodes_, row_ptr_, col_idx_, std::move(features), label_);
}

bool operator==(const Graph& a, const Graph& b) {
  return a.num_nodes_ == b.num_nodes_ && a.label_ == b.label_ && a.row_ptr_ == b.row_ptr_ &&
         a.col_idx_ == b.col_idx_ && a.features_.rows() == b.features_.rows() &&
         a.features_.cols() == b.features_.cols() && a.features_ == b.features_;
}

std::size_t Dataset::total_nodes() const {
  std::size_t n = 0;
  for (const auto& g : graphs) n += g.num_nodes();
  return n;
}

std::size_t Dataset::total_edges() const {
  std::size_t m = 0;
  for (const auto& g : graphs) m += g.num_edges();
  return m;
}

double Dataset::majority_fraction() const {
  if (graphs.empty()) return 0.0;
  std::vector<std::size_t> counts(num_classes, 0);
  for (const auto& g : graphs) ++counts.at(static_cast<std::size_t>(g.label()));
  return static_cast<double>(*std::max_element(counts.begin(), counts.end())) /
         static_cast<double>(graphs.size());
}

void Dataset::validate() const {
  std::vector<bool> seen(num_classes, false);
  for (std::size_t gi = 0; gi < graphs.size(); ++gi) {
    const auto& g = graphs[gi];
    if (g.num_features() != num_features) {
      throw ValidationError("dataset " + name + ": graph " + std::to_string(gi) + " has " +
                            std::to_string(g.num_features()) + " feature channels, expected " +
                            std::to_string(num_features));
    }
    if (g.label() < 0 || static_cast<std::size_t>(g.label()) >= num_classes) {
      throw ValidationError("dataset " + name + ": graph " + std::to_string(gi) +
                            " has label outside 0.." + std::to_string(num_classes - 1));
    }
    seen[static_cast<std::size_t>(g.label())] = true;
  }
  if (!graphs.empty() && std::find(seen.begin(), seen.end(), false) != seen.end()) {
    throw ValidationError("dataset " + name + ": labels do not cover 0.." +
                          std::to_string(num_classes - 1));
  }
}

Batch build_batch(std::span<const Graph* const> graphs) {
  if (graphs.empty()) throw ArgumentError("build_batch: empty graph list");
  const std::size_t d = graphs.front()->num_features();

  Batch batch;
  batch.offsets.reserve(graphs.size() + 1);
  batch.offsets.push_back(0);
  std::size_t total_nodes = 0;
  std::size_t total_entries = 0;
  for (const Graph* g : graphs) {
    if (g->num_features() != d) {
      throw ShapeError("build_batch: members disagree on feature width");
    }
    total_nodes += g->num_nodes();
    total_entries += g->col_idx().size();
    batch.offsets.push_back(total_nodes);
    batch.labels.push_back(g->label());
  }

  std::vector<std::size_t> row_ptr;
  row_ptr.reserve(total_nodes + 1);
  row_ptr.push_back(0);
  std::vector<NodeId> col;
  col.reserve(total_entries);
  Matrix x(static_cast<Eigen::Index>(total_nodes), static_cast<Eigen::Index>(d));
  batch.graph_id.reserve(total_nodes);

  for (std::size_t m = 0; m < graphs.size(); ++m) {
    const Graph& g = *graphs[m];
    const auto base = static_cast<NodeId>(batch.offsets[m]);
    for (std::size_t i = 0; i < g.num_nodes(); ++i) {
      for (NodeId j : g.neighbors(static_cast<NodeId>(i))) col.push_back(base + j);
      row_ptr.push_back(col.size());
      batch.graph_id.push_back(static_cast<std::uint32_t>(m));
    }
    if (g.num_nodes() > 0) {
      x.middleRows(static_cast<Eigen::Index>(base), static_cast<Eigen::Index>(g.num_nodes())) =
          g.features();
    }
  }
  batch.graph = Graph(total_nodes, std::move(row_ptr), std::move(col), std::move(x), 0);
  return batch;
}

Batch build_batch(std::span<const Graph> graphs) {
  std::vector<const Graph*> ptrs;
  ptrs.reserve(graphs.size());
  for (const auto& g : graphs) ptrs.push_back(&g);
  return build_batch(std::span<const Graph* const>(ptrs));
}

Batch build_batch(const Dataset& ds, std::span<const std::size_t> indices) {
  std::vector<const Graph*> ptrs;
  ptrs.reserve(indices.size());
  for (std::size_t i : indices) ptrs.push_back(&ds.graphs.at(i));
  return build_batch(std::span<const Graph* const>(ptrs));
}

Graph batch_member(const Batch& batch, std::size_t m) {
  const std::size_t lo = batch.offsets.at(m);
  const std::size_t hi = batch.offsets.at(m + 1);
  std::vector<std::size_t> row_ptr{0};
  std::vector<NodeId> col;
  for (std::size_t i = lo; i < hi; ++i) {
    for (NodeId j : batch.graph.neighbors(static_cast<NodeId>(i))) {
      col.push_back(static_cast<NodeId>(j - lo));
    }
    row_ptr.push_back(col.size());
  }
  Matrix x = batch.graph.features().middleRows(static_cast<Eigen::Index>(lo),
                                               static_cast<Eigen::Index>(hi - lo));
  return Graph(hi - lo, std::move(row_ptr), std::move(col), std::move(x), batch.labels.at(m));
}

std::vector<std::vector<NodeId>> hop_shells(const Graph& g, NodeId center, int max_hops) {
  if (center >= g.num_nodes()) throw ArgumentError("hop_shells: center out of range");
  if (max_hops < 0) throw ArgumentError("hop_shells: negative hop count");
  std::vector<std::vector<NodeId>> shells(static_cast<std::size_t>(max_hops) + 1);
  std::vector<bool> visited(g.num_nodes(), false);
  visited[center] = true;
  shells[0].push_back(center);
  for (int h = 1; h <= max_hops; ++h) {
    auto& next = shells[static_cast<std::size_t>(h)];
    for (NodeId u : shells[static_cast<std::size_t>(h - 1)]) {
      for (NodeId v : g.neighbors(u)) {
        if (!visited[v]) {
          visited[v] = true;
          next.push_back(v);
        }
      }
    }
    if (next.empty()) break;
  }
  return shells;
}

std::vector<NodeId> khop_nodes(const Graph& g, NodeId center, int k) {
  std::vector<NodeId> out;
  for (const auto& shell : hop_shells(g, center, k)) out.insert(out.end(), shell.begin(), shell.end());
  std::sort(out.begin(), out.end());
  return out;
}

Split split_dataset(const Dataset& ds, std::uint64_t seed) {
  const std::size_t n = ds.graphs.size();
  if (n < 10) throw ArgumentError("split_dataset: need at least 10 graphs, got " + std::to_string(n));
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);

  const std::size_t n_train = n * 8 / 10;
  const std::size_t n_val = n / 10;
  Split s;
  s.train.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
  s.val.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train),
               order.begin() + static_cast<std::ptrdiff_t>(n_train + n_val));
  s.test.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train + n_val), order.end());
  return s;
}

}  // namespace lightk
