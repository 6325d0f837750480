#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "lightk/config.hpp"
#include "lightk/graph.hpp"
#include "lightk/model.hpp"

namespace lightk {

/// Patience-based stopping on validation accuracy; ties in accuracy count as
/// an improvement only when validation loss is strictly lower. Epochs are
/// 1-based.
class EarlyStopping {
 public:
  EarlyStopping(int patience, int max_epochs) : patience_(patience), max_epochs_(max_epochs) {}

  /// Records an epoch's validation metrics; returns true when it is the new best.
  bool update(int epoch, double val_accuracy, double val_loss);
  bool should_stop(int epoch) const;
  int best_epoch() const noexcept { return best_epoch_; }
  double best_accuracy() const noexcept { return best_accuracy_; }

 private:
  int patience_;
  int max_epochs_;
  int best_epoch_ = 0;
  double best_accuracy_ = -1.0;
  double best_loss_ = 0.0;
};

struct EvalResult {
  double accuracy = 0.0;
  double loss = 0.0;
};

/// Accuracy (argmax of logits) and mean cross-entropy over `indices`, in
/// evaluation mode. Throws ArgumentError for an empty index list.
EvalResult evaluate(Model& model, std::span<const std::size_t> indices, const Dataset& ds, int batch_size);

struct SeedResult {
  std::uint64_t seed = 0;
  bool failed = false;
  std::string failure;
  double test_accuracy = 0.0;
  double best_val_accuracy = 0.0;
  int best_epoch = 0;
  int epochs_run = 0;
  double train_seconds = 0.0;
};

struct RunReport {
  std::string dataset;
  TrainConfig config;
  std::vector<SeedResult> per_seed;
  double mean = 0.0;  // over non-failed seeds
  double std = 0.0;   // population standard deviation
  ParamCount params;
  double majority_baseline = 0.0;
  std::size_t pool_checks = 0;
  double load_seconds = 0.0;
  double seconds_per_epoch = 0.0;
  double total_seconds = 0.0;

  std::size_t failed_seeds() const;
};

struct RunOptions {
  /// Progress lines (one per seed, plus per-epoch when `verbose`).
  std::ostream* log = nullptr;
  bool verbose = false;
};

/// Multi-seed protocol: per seed split 80/10/10, train with Adam on shuffled
/// mini-batches, early-stop on validation accuracy, restore the best
/// checkpoint, and score the test split. Seeds that hit a numeric failure are
/// reported and excluded from the mean.
RunReport run_experiment(const TrainConfig& cfg, const Dataset& ds, const RunOptions& options = {});

/// Keys: dataset, config, per_seed, mean, std, params, seconds_per_epoch,
/// total_seconds (plus param breakdown, baseline and timing details).
nlohmann::json report_to_json(const RunReport& report);
/// Header plus one row: dataset, conv, k, nf, pn, pe, accuracy, params, time.
void write_report_csv(std::ostream& out, const RunReport& report);

}  // namespace lightk
