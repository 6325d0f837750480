#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "lightk/config.hpp"
#include "lightk/layers.hpp"

namespace lightk {

struct ParamCount {
  std::size_t total = 0;
  /// (group name, trainable entries): "block<i>.conv", "block<i>.pool", "classifier".
  std::vector<std::pair<std::string, std::size_t>> per_layer;
};

/// Stacked [LiConv -> KPool] blocks with summed per-block readouts and an
/// MLP head. With pooling disabled the block output is ReLU(conv); with
/// pooling the block output is the pooled, score-scaled conv output.
class Model {
 public:
  /// Throws ConfigError for an invalid configuration.
  Model(const TrainConfig& cfg, std::size_t in_features, std::size_t classes, std::uint64_t seed);

  struct Output {
    Var logits;
    /// Pooling invariant checks performed during this forward pass.
    std::size_t pool_checks = 0;
  };

  /// `rng` drives dropout; pass nullptr for evaluation.
  Output forward(Tape& tape, const Batch& batch, std::mt19937_64* rng);

  std::vector<Parameter*> parameters();
  std::vector<const Parameter*> parameters() const;
  ParamCount param_count() const;

  std::vector<Matrix> snapshot() const;
  void restore(const std::vector<Matrix>& values);

  const TrainConfig& config() const noexcept { return cfg_; }

 private:
  struct Block {
    LiConvParams conv;
    std::optional<KPoolParams> pool;
  };

  TrainConfig cfg_;
  std::vector<Block> blocks_;
  MlpParams head_;
};

/// Total trainable entries of a model, 0 for no model at all.
std::size_t param_count(const Model* model);

}  // namespace lightk
