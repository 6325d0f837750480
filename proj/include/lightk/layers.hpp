#pragma once

#include <cstddef>
#include <random>
#include <string>
#include <vector>

#include "lightk/autodiff.hpp"
#include "lightk/graph.hpp"
#include "lightk/kernels.hpp"

namespace lightk {

/// Glorot-uniform rows x cols matrix.
Matrix glorot_uniform(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng);

/// Light k-order convolution: one shared d x d' projection, then a
/// per-channel weight vector for each hop.
struct LiConvParams {
  Parameter weight;  // d x d'
  Parameter merge;   // (k+1) x d', row m is the hop-m weight vector
  Parameter bias;    // 1 x d'
  int k = 0;

  static LiConvParams init(const std::string& prefix, std::size_t in, std::size_t out, int k,
                           std::mt19937_64& rng);

  std::size_t in_features() const { return static_cast<std::size_t>(weight.value.rows()); }
  std::size_t out_features() const { return static_cast<std::size_t>(weight.value.cols()); }
  /// Trainable entries excluding bias: (d + k + 1) * d'.
  std::size_t weight_count() const { return weight.size() + merge.size(); }
};

/// Anchor vectors for hops 0..k; hops[m] holds T_m (X W), n x d'.
struct AnchorStack {
  std::vector<Var> hops;

  int order() const { return static_cast<int>(hops.size()) - 1; }
  const Matrix& slice(int m) const { return hops.at(static_cast<std::size_t>(m)).value(); }
};

struct ConvOutput {
  AnchorStack anchors;
  Var out;  // pre-activation, n x d'
};

/// z'_i = sum_m z_i^m .* w^m + b. The plan must be built on the graph whose
/// nodes index the rows of `x`, with order params.k.
ConvOutput liconv_forward(const PropagationPlan& plan, const Var& x, LiConvParams& params);
/// Convenience overload building the plan on batch.graph.
ConvOutput liconv_forward(const Batch& batch, const Var& x, LiConvParams& params, KernelKind kernel);

struct PoolFlags {
  bool normalize = true;   // NF
  bool nodes = true;       // pN
  bool edges = true;       // pE
};

struct KPoolParams {
  Parameter theta;  // (k+1)*d' x 1 attention vector over concatenated anchors
  double rho_v = 1.0;
  double rho_e = 1.0;
  PoolFlags flags;

  static KPoolParams init(const std::string& prefix, std::size_t hidden, int k, double rho_v,
                          double rho_e, PoolFlags flags, std::mt19937_64& rng);
};

struct PoolResult {
  /// Kept union-node indices, ascending.
  std::vector<std::size_t> kept_nodes;
  /// Kept edges in the pooled batch's numbering (i < j).
  std::vector<Edge> kept_edges;
  /// Node scores w_i for every input node, n x 1.
  Var scores;
  /// Features of kept nodes.
  Var x;
  /// Pooled batch; its graph carries x's values as features.
  Batch batch;
};

/// ceil(ratio * count) with a small tolerance against round-off, clipped to
/// [0, count].
std::size_t keep_count(double ratio, std::size_t count);

/// exp(||x_i - x_j||) per edge.
std::vector<double> edge_scores(const Matrix& x, std::span<const Edge> edges);

/// Node scoring, feature normalization, and top-rho node and edge retention.
/// Edge scores use batch.graph.features() (the layer's input). Selection is
/// per member graph with ties broken toward lower indices; selection is
/// constant with respect to differentiation.
PoolResult pool_forward(const Batch& batch, const AnchorStack& anchors, const Var& conv_out,
                        KPoolParams& params);

/// Throws std::logic_error when a pooling result breaks the keep-count or
/// edge-endpoint invariants.
void check_pool_invariants(const Batch& before, const PoolResult& result, const KPoolParams& params);

/// Per member graph concat(mean, max) over nodes, num_graphs x 2d'.
Var readout(const Var& x, const Batch& batch);

/// Two-layer MLP head 2d' -> d' -> C.
struct MlpParams {
  Parameter w1;
  Parameter b1;
  Parameter w2;
  Parameter b2;

  static MlpParams init(std::size_t in, std::size_t hidden, std::size_t classes, std::mt19937_64& rng);
};

/// Logits per graph. Dropout with rate `dropout` follows the hidden ReLU when
/// `rng` is non-null (training); evaluation passes nullptr.
Var classifier_forward(const Var& h, MlpParams& params, double dropout, std::mt19937_64* rng);

}  // namespace lightk
