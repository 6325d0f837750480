#include "lightk/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <ostream>
#include <random>

#include "lightk/errors.hpp"
#include "lightk/optim.hpp"

namespace lightk {

bool EarlyStopping::update(int epoch, double val_accuracy, double val_loss) {
  const bool better = val_accuracy > best_accuracy_ ||
                      (val_accuracy == best_accuracy_ && val_loss < best_loss_);
  if (better) {
    best_epoch_ = epoch;
    best_accuracy_ = val_accuracy;
    best_loss_ = val_loss;
  }
  return better;
}

bool EarlyStopping::should_stop(int epoch) const {
  return epoch >= max_epochs_ || epoch - best_epoch_ >= patience_;
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

}  // namespace

EvalResult evaluate(Model& model, std::span<const std::size_t> indices, const Dataset& ds, int batch_size) {
  if (indices.empty()) throw ArgumentError("evaluate: empty index list");
  std::size_t correct = 0;
  double loss_sum = 0.0;
  const auto step = static_cast<std::size_t>(std::max(batch_size, 1));
  for (std::size_t start = 0; start < indices.size(); start += step) {
    const auto chunk = indices.subspan(start, std::min(step, indices.size() - start));
    const Batch batch = build_batch(ds, chunk);
    Tape tape;
    const Var logits = model.forward(tape, batch, nullptr).logits;
    const std::vector<int>& labels = batch.labels;
    const Var loss = ad::softmax_cross_entropy(logits, labels);
    loss_sum += loss.value()(0, 0) * static_cast<double>(chunk.size());
    for (Eigen::Index i = 0; i < logits.rows(); ++i) {
      Eigen::Index arg = 0;
      logits.value().row(i).maxCoeff(&arg);
      if (arg == labels[static_cast<std::size_t>(i)]) ++correct;
    }
  }
  return {static_cast<double>(correct) / static_cast<double>(indices.size()),
          loss_sum / static_cast<double>(indices.size())};
}

std::size_t RunReport::failed_seeds() const {
  return static_cast<std::size_t>(std::count_if(per_seed.begin(), per_seed.end(),
                                                [](const SeedResult& s) { return s.failed; }));
}

RunReport run_experiment(const TrainConfig& cfg, const Dataset& ds, const RunOptions& options) {
  cfg.validate();
  const auto run_start = Clock::now();
  RunReport report;
  report.dataset = ds.name;
  report.config = cfg;
  report.majority_baseline = ds.majority_fraction();
  report.params = Model(cfg, ds.num_features, ds.num_classes, 0).param_count();

  double epoch_seconds = 0.0;
  int epochs_total = 0;
  const auto batch_size = static_cast<std::size_t>(cfg.batch_size);

  for (const std::uint64_t seed : cfg.seeds) {
    SeedResult result;
    result.seed = seed;
    const auto seed_start = Clock::now();
    try {
      const Split split = split_dataset(ds, seed);
      Model model(cfg, ds.num_features, ds.num_classes, seed);
      const auto params = model.parameters();
      Adam adam(cfg.lr);
      EarlyStopping stopper(cfg.patience, cfg.max_epochs);
      std::mt19937_64 rng(seed ^ 0x5deece66dULL);
      std::vector<Matrix> best = model.snapshot();
      std::vector<std::size_t> order = split.train;

      for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
        const auto epoch_start = Clock::now();
        std::shuffle(order.begin(), order.end(), rng);
        for (std::size_t start = 0; start < order.size(); start += batch_size) {
          const std::span<const std::size_t> chunk(order.data() + start,
                                                    std::min(batch_size, order.size() - start));
          const Batch batch = build_batch(ds, chunk);
          for (Parameter* p : params) p->zero_grad();
          Tape tape;
          const auto fwd = model.forward(tape, batch, &rng);
          report.pool_checks += fwd.pool_checks;
          const Var loss = ad::softmax_cross_entropy(fwd.logits, batch.labels);
          tape.backward(loss);
          adam.step(params);
        }
        const EvalResult val = evaluate(model, split.val, ds, cfg.batch_size);
        if (stopper.update(epoch, val.accuracy, val.loss)) best = model.snapshot();
        epoch_seconds += seconds_since(epoch_start);
        ++epochs_total;
        result.epochs_run = epoch;
        if (options.log && options.verbose) {
          *options.log << "  seed " << seed << " epoch " << epoch << " val_acc " << val.accuracy << " val_loss "
                       << val.loss << '\n';
        }
        if (stopper.should_stop(epoch)) break;
      }
      model.restore(best);
      result.best_epoch = stopper.best_epoch();
      result.best_val_accuracy = stopper.best_accuracy();
      result.test_accuracy = evaluate(model, split.test, ds, cfg.batch_size).accuracy;
    } catch (const NumericError& e) {
      result.failed = true;
      result.failure = e.what();
    }
    result.train_seconds = seconds_since(seed_start);
    if (options.log) {
      *options.log << "seed " << seed << ": "
                   << (result.failed ? "FAILED (" + result.failure + ")"
                                     : "test_acc " + std::to_string(result.test_accuracy))
                   << " best_epoch " << result.best_epoch << " epochs " << result.epochs_run << '\n';
    }
    report.per_seed.push_back(std::move(result));
  }

  std::vector<double> accs;
  for (const auto& s : report.per_seed) {
    if (!s.failed) accs.push_back(s.test_accuracy);
  }
  if (!accs.empty()) {
    const auto n = static_cast<double>(accs.size());
    report.mean = std::accumulate(accs.begin(), accs.end(), 0.0) / n;
    double ss = 0.0;
    for (double a : accs) ss += (a - report.mean) * (a - report.mean);
    report.std = std::sqrt(ss / n);
  }
  report.seconds_per_epoch = epochs_total ? epoch_seconds / epochs_total : 0.0;
  report.total_seconds = seconds_since(run_start);
  return report;
}

nlohmann::json report_to_json(const RunReport& report) {
  nlohmann::json per_seed = nlohmann::json::array();
  for (const auto& s : report.per_seed) {
    nlohmann::json row{{"seed", s.seed},
                       {"failed", s.failed},
                       {"test_accuracy", s.test_accuracy},
                       {"best_val_accuracy", s.best_val_accuracy},
                       {"best_epoch", s.best_epoch},
                       {"epochs_run", s.epochs_run},
                       {"train_seconds", s.train_seconds}};
    if (s.failed) row["failure"] = s.failure;
    per_seed.push_back(std::move(row));
  }
  nlohmann::json breakdown = nlohmann::json::object();
  for (const auto& [name, n] : report.params.per_layer) breakdown[name] = n;
  nlohmann::json config;
  to_json(config, report.config);
  return nlohmann::json{{"dataset", report.dataset},
                        {"config", config},
                        {"per_seed", per_seed},
                        {"mean", report.mean},
                        {"std", report.std},
                        {"failed_seeds", report.failed_seeds()},
                        {"params", report.params.total},
                        {"params_per_layer", breakdown},
                        {"majority_baseline", report.majority_baseline},
                        {"pool_checks", report.pool_checks},
                        {"load_seconds", report.load_seconds},
                        {"seconds_per_epoch", report.seconds_per_epoch},
                        {"total_seconds", report.total_seconds}};
}

void write_report_csv(std::ostream& out, const RunReport& report) {
  const TrainConfig& c = report.config;
  std::string method = c.conv == ConvKind::licheb ? "LiCheb" : "LiMixhop";
  if (c.pooling()) {
    method += std::string("(") + (c.nf ? "NF" : "noNF") + (c.pn ? "+pN" : "") + (c.pe ? "+pE" : "") + ")";
  }
  const auto old = out.precision(6);
  out << "method,dataset,mean,std,params,time_50_epochs\n";
  out << method << ',' << report.dataset << ',' << report.mean << ',' << report.std << ','
      << report.params.total << ',' << report.seconds_per_epoch * 50.0 << '\n';
  out.precision(old);
}

}  // namespace lightk
