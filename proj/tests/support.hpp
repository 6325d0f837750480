#pragma once

#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "lightk/graph.hpp"

namespace lightk::testing {

inline Matrix random_matrix(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = normal(rng);
  return m;
}

inline Graph path_graph(std::size_t n, Matrix x, int label = 0) {
  std::vector<Edge> edges;
  for (std::size_t i = 0; i + 1 < n; ++i) edges.emplace_back(static_cast<NodeId>(i), static_cast<NodeId>(i + 1));
  return Graph::from_edges(n, edges, std::move(x), label);
}

inline Graph path_graph(std::size_t n) {
  return path_graph(n, Matrix::Ones(static_cast<Eigen::Index>(n), 1));
}

inline Graph complete_graph(std::size_t n, Matrix x, int label = 0) {
  std::vector<Edge> edges;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) edges.emplace_back(static_cast<NodeId>(i), static_cast<NodeId>(j));
  }
  return Graph::from_edges(n, edges, std::move(x), label);
}

inline Graph complete_graph(std::size_t n) {
  return complete_graph(n, Matrix::Ones(static_cast<Eigen::Index>(n), 1));
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path temp_dir(const std::string& tag) {
  auto dir = std::filesystem::temp_directory_path() / ("lightk_test_" + tag);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

/// Graph with `n` nodes relabeled by `perm` (node i becomes perm[i]).
inline Graph permute(const Graph& g, const std::vector<NodeId>& perm) {
  std::vector<Edge> edges;
  for (auto [i, j] : g.edge_list()) edges.emplace_back(perm[i], perm[j]);
  Matrix x(g.features().rows(), g.features().cols());
  for (std::size_t i = 0; i < g.num_nodes(); ++i) x.row(perm[i]) = g.features().row(static_cast<Eigen::Index>(i));
  return Graph::from_edges(g.num_nodes(), edges, std::move(x), g.label());
}

}  // namespace lightk::testing
