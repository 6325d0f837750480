#include "lightk/config.hpp"

#include <array>
#include <utility>

#include "lightk/errors.hpp"

namespace lightk {

std::string_view to_string(ConvKind kind) { return kind == ConvKind::licheb ? "licheb" : "limixhop"; }

ConvKind parse_conv_kind(std::string_view text) {
  if (text == "licheb") return ConvKind::licheb;
  if (text == "limixhop") return ConvKind::limixhop;
  throw ConfigError("unknown conv kind '" + std::string(text) + "' (expected licheb or limixhop)");
}

void TrainConfig::validate() const {
  auto fail = [](const std::string& msg) { throw ConfigError("config: " + msg); };
  if (dataset.empty()) fail("dataset is empty");
  if (k < 0) fail("k must be >= 0");
  if (layers < 1) fail("layers must be >= 1");
  if (hidden < 1) fail("hidden must be >= 1");
  if (batch_size < 1) fail("batch_size must be >= 1");
  if (!(lr > 0.0)) fail("lr must be positive");
  if (!(rho_v > 0.0 && rho_v <= 1.0)) fail("rho_v must lie in (0, 1]");
  if (!(rho_e > 0.0 && rho_e <= 1.0)) fail("rho_e must lie in (0, 1]");
  if (max_epochs < 1) fail("max_epochs must be >= 1");
  if (patience < 1) fail("patience must be >= 1");
  if (!(dropout >= 0.0 && dropout < 1.0)) fail("dropout must lie in [0, 1)");
  if (seeds.empty()) fail("seeds is empty");
}

TrainConfig default_config(const std::string& dataset) {
  struct Ratios {
    const char* name;
    double rho_v;
    double rho_e;
  };
  static constexpr std::array<Ratios, 6> kTable{{{"PROTEINS", 0.6, 0.8},
                                                 {"DD", 0.8, 0.7},
                                                 {"NCI1", 0.9, 0.9},
                                                 {"NCI109", 0.9, 0.4},
                                                 {"Mutagenicity", 0.9, 0.7},
                                                 {"FRANKENSTEIN", 0.9, 0.6}}};
  TrainConfig cfg;
  cfg.dataset = dataset;
  cfg.rho_v = 0.8;
  cfg.rho_e = 0.8;
  for (const auto& r : kTable) {
    if (dataset == r.name) {
      cfg.rho_v = r.rho_v;
      cfg.rho_e = r.rho_e;
    }
  }
  return cfg;
}

void to_json(nlohmann::json& j, const TrainConfig& cfg) {
  j = nlohmann::json{{"dataset", cfg.dataset},
                     {"conv", std::string(to_string(cfg.conv))},
                     {"k", cfg.k},
                     {"layers", cfg.layers},
                     {"hidden", cfg.hidden},
                     {"batch_size", cfg.batch_size},
                     {"lr", cfg.lr},
                     {"rho_v", cfg.rho_v},
                     {"rho_e", cfg.rho_e},
                     {"nf", cfg.nf},
                     {"pn", cfg.pn},
                     {"pe", cfg.pe},
                     {"max_epochs", cfg.max_epochs},
                     {"patience", cfg.patience},
                     {"dropout", cfg.dropout},
                     {"seeds", cfg.seeds}};
}

void apply_json(TrainConfig& cfg, const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("config: top level must be a JSON object");
  try {
    for (const auto& [key, value] : j.items()) {
      if (key == "dataset") cfg.dataset = value.get<std::string>();
      else if (key == "conv") cfg.conv = parse_conv_kind(value.get<std::string>());
      else if (key == "k") cfg.k = value.get<int>();
      else if (key == "layers") cfg.layers = value.get<int>();
      else if (key == "hidden") cfg.hidden = value.get<int>();
      else if (key == "batch_size") cfg.batch_size = value.get<int>();
      else if (key == "lr") cfg.lr = value.get<double>();
      else if (key == "rho_v") cfg.rho_v = value.get<double>();
      else if (key == "rho_e") cfg.rho_e = value.get<double>();
      else if (key == "nf") cfg.nf = value.get<bool>();
      else if (key == "pn") cfg.pn = value.get<bool>();
      else if (key == "pe") cfg.pe = value.get<bool>();
      else if (key == "max_epochs") cfg.max_epochs = value.get<int>();
      else if (key == "patience") cfg.patience = value.get<int>();
      else if (key == "dropout") cfg.dropout = value.get<double>();
      else if (key == "seeds") cfg.seeds = value.get<std::vector<std::uint64_t>>();
      else throw ConfigError("config: unknown key '" + key + "'");
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
}

}  // namespace lightk
