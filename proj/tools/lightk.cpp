// lightk command-line entry point: analyze, train, verify.
//
// Exit codes: 0 success, 1 check/experiment/data failure, 2 usage or config error.

#include <malloc.h>

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "lightk/errors.hpp"
#include "lightk/kinfo.hpp"
#include "lightk/train.hpp"
#include "lightk/tu_format.hpp"
#include "lightk/verify.hpp"

namespace fs = std::filesystem;
using namespace lightk;

namespace {

constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;

struct CommonArgs {
  std::string dataset;
  std::string data_root = "data";
  std::string out;
};

struct TrainArgs {
  std::string config_file;
  std::optional<std::string> conv;
  std::optional<int> k, layers, hidden, batch_size, max_epochs, patience;
  std::optional<double> lr, rho_v, rho_e;
  std::vector<std::uint64_t> seeds;
  bool no_nf = false;
  bool no_pool = false;
  bool no_edge_pool = false;
  bool verbose = false;
};

struct AnalyzeArgs {
  int k_max = 10;
  double epsilon = 0.05;
  int fit_lo = 2;
  std::size_t node_cap = 20000;
  bool distinct_values = false;
};

std::string timestamp() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  localtime_r(&now, &tm);
  std::ostringstream s;
  s << std::put_time(&tm, "%Y%m%d-%H%M%S");
  return s.str();
}

fs::path output_dir(const CommonArgs& args) {
  fs::path dir = args.out.empty() ? fs::path("runs") / args.dataset / timestamp() : fs::path(args.out);
  fs::create_directories(dir);
  return dir;
}

std::ofstream open_output(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw LoadError("cannot write " + path.string());
  return out;
}

Dataset load(const CommonArgs& args, double* seconds = nullptr) {
  const auto start = std::chrono::steady_clock::now();
  Dataset ds = load_tu_dataset(args.data_root, args.dataset);
  if (seconds) *seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  std::cerr << "loaded " << ds.name << ": " << ds.graphs.size() << " graphs, " << ds.total_nodes() << " nodes, "
            << ds.total_edges() << " edges, d=" << ds.num_features << ", C=" << ds.num_classes << '\n';
  return ds;
}

int cmd_analyze(const CommonArgs& common, const AnalyzeArgs& args) {
  if (!(args.epsilon > 0.0 && args.epsilon < 1.0)) throw ConfigError("--epsilon must lie in (0, 1)");
  const Dataset ds = load(common);
  KinfoOptions opts;
  opts.node_cap = args.node_cap;
  opts.distinct_values = args.distinct_values;
  const IgCurve curve = ig_curve(local_entropy(ds, args.k_max, opts), args.k_max);
  const fs::path dir = output_dir(common);
  {
    auto out = open_output(dir / "ig_curve.csv");
    write_ig_csv(out, curve);
  }
  std::cout << "IG(k):";
  for (int k = 0; k <= curve.k_max(); ++k) std::cout << ' ' << curve.ig[static_cast<std::size_t>(k)];
  std::cout << '\n';

  ExpFit fit;
  try {
    fit = fit_exponential(curve, args.fit_lo, args.k_max);
  } catch (const FitError& e) {
    std::cerr << "fit error: " << e.what() << '\n';
    std::cout << "wrote " << (dir / "ig_curve.csv").string() << '\n';
    return kExitFailure;
  }
  if (fit.b <= 0.0) {
    std::cerr << "fit error: non-decaying curve (b = " << fit.b << "), no k can meet the budget\n";
    return kExitFailure;
  }
  const KSelection sel = select_k(fit, args.epsilon);
  const nlohmann::json j{{"dataset", ds.name},       {"a", fit.a},
                         {"b", fit.b},               {"r2", fit.r2},
                         {"mse", fit.mse},           {"k_hat", sel.k_hat},
                         {"epsilon", args.epsilon},  {"loss_achieved", sel.loss},
                         {"fit_k", fit.used_k},      {"ig", curve.ig},
                         {"channels", curve.channels}};
  open_output(dir / "fit.json") << j.dump(2) << '\n';
  {
    auto out = open_output(dir / "fit.csv");
    write_fit_csv(out, ds.name, fit, sel, args.epsilon);
  }
  std::cout << "fit: a=" << fit.a << " b=" << fit.b << " R2=" << fit.r2 << " MSE=" << fit.mse << '\n'
            << "k_hat=" << sel.k_hat << " (information loss " << sel.loss * 100.0 << "% at epsilon "
            << args.epsilon << ")\n"
            << "wrote " << dir.string() << '\n';
  return 0;
}

TrainConfig resolve_config(CommonArgs& common, const TrainArgs& args) {
  nlohmann::json file;
  if (!args.config_file.empty()) {
    std::ifstream in(args.config_file);
    if (!in) throw ConfigError("cannot read config file " + args.config_file);
    try {
      in >> file;
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError("config file " + args.config_file + ": " + e.what());
    }
    if (!file.is_object()) throw ConfigError("config file must hold a JSON object");
  }
  if (common.dataset.empty() && file.contains("dataset")) common.dataset = file["dataset"].get<std::string>();
  if (common.dataset.empty()) throw ConfigError("--dataset is required");

  // Defaults < config file < flags.
  TrainConfig cfg = default_config(common.dataset);
  if (!file.is_null()) apply_json(cfg, file);
  cfg.dataset = common.dataset;
  if (args.conv) cfg.conv = parse_conv_kind(*args.conv);
  if (args.k) cfg.k = *args.k;
  if (args.layers) cfg.layers = *args.layers;
  if (args.hidden) cfg.hidden = *args.hidden;
  if (args.batch_size) cfg.batch_size = *args.batch_size;
  if (args.max_epochs) cfg.max_epochs = *args.max_epochs;
  if (args.patience) cfg.patience = *args.patience;
  if (args.lr) cfg.lr = *args.lr;
  if (args.rho_v) cfg.rho_v = *args.rho_v;
  if (args.rho_e) cfg.rho_e = *args.rho_e;
  if (!args.seeds.empty()) cfg.seeds = args.seeds;
  if (args.no_nf) cfg.nf = false;
  if (args.no_pool) cfg.pn = cfg.pe = false;
  if (args.no_edge_pool) cfg.pe = false;
  cfg.validate();
  return cfg;
}

int cmd_train(CommonArgs& common, const TrainArgs& args) {
  const TrainConfig cfg = resolve_config(common, args);
  double load_seconds = 0.0;
  const Dataset ds = load(common, &load_seconds);
  RunReport report = run_experiment(cfg, ds, {&std::cerr, args.verbose});
  report.load_seconds = load_seconds;
  const fs::path dir = output_dir(common);
  open_output(dir / "report.json") << report_to_json(report).dump(2) << '\n';
  {
    auto out = open_output(dir / "report.csv");
    write_report_csv(out, report);
  }
  std::cout << std::fixed << std::setprecision(4) << "test accuracy " << report.mean << " +- " << report.std
            << " over " << (report.per_seed.size() - report.failed_seeds()) << " seed(s); params "
            << report.params.total << "; majority baseline " << report.majority_baseline << '\n'
            << "wrote " << dir.string() << '\n';
  return report.failed_seeds() == report.per_seed.size() ? kExitFailure : 0;
}

int cmd_verify() {
  bool ok = true;
  for (const auto& r : verify::run_suite()) {
    std::cout << (r.passed ? "[PASS] " : "[FAIL] ") << r.name << ": " << r.detail << '\n';
    ok = ok && r.passed;
  }
  std::cout << (ok ? "all checks passed" : "some checks FAILED") << '\n';
  return ok ? 0 : kExitFailure;
}

}  // namespace

int main(int argc, char** argv) {
  // Training allocates and frees many activation-sized buffers per step; keep
  // them in the heap instead of mapping and unmapping pages every time.
  mallopt(M_MMAP_THRESHOLD, 256 << 20);
  mallopt(M_TRIM_THRESHOLD, 512 << 20);
  CLI::App app{"Light k-order graph convolution: kInfo analysis, training and self-checks"};
  app.require_subcommand(1);
  CommonArgs common;
  AnalyzeArgs analyze_args;
  TrainArgs train_args;

  auto add_common = [&](CLI::App* sub, bool dataset_required) {
    auto* opt = sub->add_option("--dataset", common.dataset, "TU dataset name, e.g. PROTEINS");
    if (dataset_required) opt->required();
    sub->add_option("--data-root", common.data_root, "Directory holding TU datasets")->capture_default_str();
    sub->add_option("--out", common.out, "Output directory (default runs/<dataset>/<timestamp>)");
  };

  CLI::App* analyze = app.add_subcommand("analyze", "Compute IG(k), fit a*exp(-b k) and select k");
  add_common(analyze, true);
  analyze->add_option("--kmax", analyze_args.k_max, "Largest hop count")->capture_default_str()
      ->check(CLI::PositiveNumber);
  analyze->add_option("--epsilon", analyze_args.epsilon, "Tolerated information loss")->capture_default_str();
  analyze->add_option("--fit-from", analyze_args.fit_lo, "First k used in the fit")->capture_default_str();
  analyze->add_option("--node-cap", analyze_args.node_cap, "Maximum entropy rows")->capture_default_str();
  analyze->add_flag("--distinct-values", analyze_args.distinct_values,
                    "Treat neighborhood values as a set rather than a multiset");

  CLI::App* train = app.add_subcommand("train", "Run the multi-seed training protocol");
  add_common(train, false);
  train->add_option("--config", train_args.config_file, "JSON file with TrainConfig fields");
  train->add_option("--conv", train_args.conv, "licheb or limixhop");
  train->add_option("--k", train_args.k, "Convolution order");
  train->add_option("--layers", train_args.layers, "Conv(+pool) blocks");
  train->add_option("--hidden", train_args.hidden, "Hidden width d'");
  train->add_option("--batch-size", train_args.batch_size, "Mini-batch size");
  train->add_option("--lr", train_args.lr, "Adam learning rate");
  train->add_option("--rho-v", train_args.rho_v, "Node keep ratio");
  train->add_option("--rho-e", train_args.rho_e, "Edge keep ratio");
  train->add_option("--seeds", train_args.seeds, "Comma-separated seed list")->delimiter(',');
  train->add_option("--max-epochs", train_args.max_epochs, "Epoch limit");
  train->add_option("--patience", train_args.patience, "Early-stopping patience");
  train->add_flag("--no-nf", train_args.no_nf, "Disable feature normalization in pooling");
  train->add_flag("--no-pool", train_args.no_pool, "Disable node and edge pooling (conv-only)");
  train->add_flag("--no-edge-pool", train_args.no_edge_pool, "Disable edge pooling");
  train->add_flag("-v,--verbose", train_args.verbose, "Log every epoch");

  CLI::App* verify_cmd = app.add_subcommand("verify", "Run the built-in oracle checks");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (*analyze) return cmd_analyze(common, analyze_args);
    if (*train) return cmd_train(common, train_args);
    if (*verify_cmd) return cmd_verify();
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitUsage;
}
