#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "lightk/matrix.hpp"

namespace lightk {

using Edge = std::pair<NodeId, NodeId>;

/// Undirected graph with node features and a class label.
///
/// Adjacency is stored in CSR form with both directions of every edge,
/// neighbor lists sorted ascending, no duplicates and no self-loops.
/// Instances are immutable after construction.
class Graph {
 public:
  Graph() = default;

  /// Validates the CSR arrays; throws ValidationError on asymmetry,
  /// out-of-range indices, self-loops, unsorted or duplicate entries, or a
  /// feature matrix whose row count differs from `num_nodes`.
  Graph(std::size_t num_nodes, std::vector<std::size_t> row_ptr,
        std::vector<NodeId> col_idx, Matrix features, int label);

  /// Builds from undirected edge pairs. Either orientation may be given;
  /// repeated pairs collapse to one edge. Self-loops are rejected.
  static Graph from_edges(std::size_t num_nodes, std::span<const Edge> edges,
                          Matrix features, int label);

  std::size_t num_nodes() const noexcept { return num_nodes_; }
  /// Undirected edge count (each {i,j} counted once).
  std::size_t num_edges() const noexcept { return col_idx_.size() / 2; }
  std::size_t num_features() const noexcept {
    return static_cast<std::size_t>(features_.cols());
  }

  const std::vector<std::size_t>& row_ptr() const noexcept { return row_ptr_; }
  const std::vector<NodeId>& col_idx() const noexcept { return col_idx_; }
  const Matrix& features() const noexcept { return features_; }
  int label() const noexcept { return label_; }

  std::span<const NodeId> neighbors(NodeId i) const {
    return {col_idx_.data() + row_ptr_[i], row_ptr_[i + 1] - row_ptr_[i]};
  }
  std::size_t degree(NodeId i) const { return row_ptr_[i + 1] - row_ptr_[i]; }

  /// Edges with i < j in row-major order.
  std::vector<Edge> edge_list() const;

  /// Same structure and label, new features (row count must match).
  Graph with_features(Matrix features) const;

  friend bool operator==(const Graph& a, const Graph& b);

 private:
  std::size_t num_nodes_ = 0;
  std::vector<std::size_t> row_ptr_{0};
  std::vector<NodeId> col_idx_;
  Matrix features_;
  int label_ = 0;
};

struct Dataset {
  std::string name;
  std::vector<Graph> graphs;
  std::size_t num_features = 0;
  std::size_t num_classes = 0;

  std::size_t total_nodes() const;
  std::size_t total_edges() const;
  /// Fraction of graphs carrying the most frequent label.
  double majority_fraction() const;

  /// Throws ValidationError when graphs disagree on the feature width or
  /// labels do not cover 0..num_classes-1.
  void validate() const;
};

/// Disjoint union of several graphs. `offsets` has one entry per member plus
/// a trailing total, so member m owns union nodes [offsets[m], offsets[m+1]).
struct Batch {
  Graph graph;
  std::vector<std::uint32_t> graph_id;
  std::vector<std::size_t> offsets;
  std::vector<int> labels;

  std::size_t num_graphs() const noexcept { return labels.size(); }
  std::size_t member_size(std::size_t m) const { return offsets[m + 1] - offsets[m]; }
};

Batch build_batch(std::span<const Graph* const> graphs);
Batch build_batch(std::span<const Graph> graphs);
Batch build_batch(const Dataset& ds, std::span<const std::size_t> indices);

/// Recovers member `m` of a batch as a standalone graph.
Graph batch_member(const Batch& batch, std::size_t m);

/// Nodes within BFS distance <= k of `center`, center included, ascending.
std::vector<NodeId> khop_nodes(const Graph& g, NodeId center, int k);

/// BFS shells around `center`: element h holds the nodes at distance exactly
/// h, for h = 0..max_hops. Trailing shells are empty once the component is
/// exhausted.
std::vector<std::vector<NodeId>> hop_shells(const Graph& g, NodeId center, int max_hops);

struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> val;
  std::vector<std::size_t> test;
};

/// Seeded 80/10/10 shuffle split: floor(0.8n) / floor(0.1n) / remainder.
Split split_dataset(const Dataset& ds, std::uint64_t seed);

}  // namespace lightk
