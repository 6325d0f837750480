#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "lightk/graph.hpp"

namespace lightk {

struct KinfoOptions {
  /// At most this many nodes (sampled without replacement, seeded) contribute
  /// entropy rows. Densities G_c always use every node.
  std::size_t node_cap = 20000;
  std::uint64_t seed = 0;
  /// Treat a neighborhood's channel values as a set instead of a multiset.
  bool distinct_values = false;
};

/// Neighborhood entropies H[row][channel][k] for k = 0..k_max, in nats.
/// One row per sampled node; rows are ordered by (graph, node).
class EntropyTable {
 public:
  struct NodeRef {
    std::uint32_t graph;
    NodeId node;
  };

  EntropyTable(int k_max, std::size_t channels, std::vector<NodeRef> rows,
               std::vector<bool> degenerate);

  int k_max() const noexcept { return k_max_; }
  std::size_t channels() const noexcept { return channels_; }
  std::size_t rows() const noexcept { return rows_.size(); }
  const std::vector<NodeRef>& row_refs() const noexcept { return rows_; }
  bool degenerate(std::size_t c) const { return degenerate_.at(c); }
  std::size_t informative_channels() const;

  double& at(std::size_t row, std::size_t c, int k) { return h_[index(row, c, k)]; }
  double at(std::size_t row, std::size_t c, int k) const { return h_[index(row, c, k)]; }

  /// |F| of row's k-hop neighborhood (same for every channel in multiset mode).
  std::size_t& neighborhood_size(std::size_t row, int k) {
    return sizes_[row * static_cast<std::size_t>(k_max_ + 1) + static_cast<std::size_t>(k)];
  }
  std::size_t neighborhood_size(std::size_t row, int k) const {
    return sizes_[row * static_cast<std::size_t>(k_max_ + 1) + static_cast<std::size_t>(k)];
  }

  /// All rows' entropies for one channel and hop.
  std::vector<double> samples(std::size_t c, int k) const;

 private:
  std::size_t index(std::size_t row, std::size_t c, int k) const {
    return (row * channels_ + c) * static_cast<std::size_t>(k_max_ + 1) + static_cast<std::size_t>(k);
  }

  int k_max_;
  std::size_t channels_;
  std::vector<NodeRef> rows_;
  std::vector<bool> degenerate_;
  std::vector<double> h_;
  std::vector<std::size_t> sizes_;
};

/// Entropy of the globally-normalized channel density restricted to each
/// node's k-hop neighborhood. Throws ArgumentError when k_max < 1.
EntropyTable local_entropy(const Dataset& ds, int k_max, const KinfoOptions& options = {});

struct IgCurve {
  /// ig[k] for k = 0..k_max; ig[0] is 0 by definition.
  std::vector<double> ig;
  /// Per informative channel KL terms, kl[c][k] (k = 0 entry unused).
  std::vector<std::vector<double>> channel_kl;
  std::vector<std::size_t> channels;

  int k_max() const noexcept { return static_cast<int>(ig.size()) - 1; }
};

/// Average KL divergence between consecutive hop-entropy distributions.
/// Throws ArgumentError("dataset has constant features") when every channel
/// is degenerate.
IgCurve ig_curve(const EntropyTable& table, int k_max);

struct ExpFit {
  double a = 0.0;
  double b = 0.0;
  double r2 = 0.0;
  double mse = 0.0;
  std::vector<int> used_k;
};

/// Log-linear least squares for IG(k) = a exp(-b k) over k_lo..k_hi
/// (clipped to the curve). Non-positive points are skipped with a warning on
/// std::clog; fewer than 3 usable points throws FitError. R^2 and MSE are on
/// the original scale.
ExpFit fit_exponential(const IgCurve& curve, int k_lo = 2, int k_hi = 10);

struct KSelection {
  int k_hat = 1;
  double loss = 1.0;  // exp(-b * k_hat)
};

/// Smallest k >= 1 with exp(-b k) <= epsilon. Throws ArgumentError unless
/// 0 < epsilon < 1 and b > 0.
KSelection select_k(double b, double epsilon);
inline KSelection select_k(const ExpFit& fit, double epsilon) { return select_k(fit.b, epsilon); }

void write_ig_csv(std::ostream& out, const IgCurve& curve);
void write_fit_csv(std::ostream& out, const std::string& dataset, const ExpFit& fit,
                   const KSelection& sel, double epsilon);

}  // namespace lightk
