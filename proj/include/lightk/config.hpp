#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "lightk/kernels.hpp"

namespace lightk {

enum class ConvKind { licheb, limixhop };

std::string_view to_string(ConvKind kind);
ConvKind parse_conv_kind(std::string_view text);
inline KernelKind kernel_of(ConvKind kind) {
  return kind == ConvKind::licheb ? KernelKind::chebyshev : KernelKind::mixhop;
}

/// Experiment protocol inputs. Defaults follow the benchmark settings:
/// k=2, 5 blocks, batch 256, lr 1e-3, 500 epochs max, patience 30, seeds 0..9.
struct TrainConfig {
  std::string dataset = "PROTEINS";
  ConvKind conv = ConvKind::licheb;
  int k = 2;
  int layers = 5;
  int hidden = 128;
  int batch_size = 256;
  double lr = 1e-3;
  double rho_v = 0.6;
  double rho_e = 0.8;
  bool nf = true;
  bool pn = true;
  bool pe = true;
  int max_epochs = 500;
  int patience = 30;
  double dropout = 0.5;
  std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4, 5, 6, 7, 8, 9};

  bool pooling() const noexcept { return pn || pe; }

  /// Throws ConfigError describing the first invalid field.
  void validate() const;
};

/// Defaults with the per-dataset node/edge keep ratios for the six standard
/// benchmarks (PROTEINS, DD, NCI1, NCI109, Mutagenicity, FRANKENSTEIN);
/// other names get 0.8 / 0.8.
TrainConfig default_config(const std::string& dataset);

void to_json(nlohmann::json& j, const TrainConfig& cfg);
/// Overrides only the keys present in `j`; unknown keys throw ConfigError.
void apply_json(TrainConfig& cfg, const nlohmann::json& j);

}  // namespace lightk
