#include "lightk/tu_format.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string_view>
#include <tuple>

#include "lightk/errors.hpp"

namespace lightk {
namespace fs = std::filesystem;

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.push_back(trim(line.substr(start, comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

template <typename T>
T parse_number(std::string_view field, const fs::path& file, std::size_t line_no) {
  T value{};
  const auto* end = field.data() + field.size();
  auto [ptr, ec] = std::from_chars(field.data(), end, value);
  if (ec != std::errc{} || ptr != end || field.empty()) {
    throw ValidationError(file.filename().string() + ": cannot parse '" + std::string(field) + "'",
                          line_no);
  }
  return value;
}

struct TextFile {
  fs::path path;
  std::vector<std::string> lines;  // blank lines dropped, numbering kept below
  std::vector<std::size_t> line_numbers;
};

std::optional<TextFile> read_lines(const fs::path& path) {
  std::ifstream in(path);
  if (!in) return std::nullopt;
  TextFile f{path, {}, {}};
  std::string line;
  std::size_t no = 0;
  while (std::getline(in, line)) {
    ++no;
    if (trim(line).empty()) continue;
    f.lines.push_back(std::move(line));
    f.line_numbers.push_back(no);
  }
  return f;
}

TextFile require_lines(const fs::path& path) {
  auto f = read_lines(path);
  if (!f) throw LoadError("missing file: " + path.string());
  return std::move(*f);
}

fs::path dataset_dir(const fs::path& root, const std::string& name) {
  const fs::path nested = root / name;
  if (fs::exists(nested / (name + "_A.txt"))) return nested;
  return root;
}

}  // namespace

Dataset load_tu_dataset(const fs::path& root, const std::string& name) {
  const fs::path dir = dataset_dir(root, name);
  auto file = [&](const char* suffix) { return dir / (name + suffix); };

  const TextFile indicator = require_lines(file("_graph_indicator.txt"));
  const TextFile graph_labels = require_lines(file("_graph_labels.txt"));
  const TextFile adjacency = require_lines(file("_A.txt"));
  const auto node_labels = read_lines(file("_node_labels.txt"));
  const auto node_attrs = read_lines(file("_node_attributes.txt"));

  const std::size_t num_graphs = graph_labels.lines.size();
  const std::size_t total_nodes = indicator.lines.size();

  // Node -> (graph, local index).
  std::vector<std::uint32_t> owner(total_nodes);
  std::vector<NodeId> local(total_nodes);
  std::vector<std::size_t> graph_sizes(num_graphs, 0);
  for (std::size_t v = 0; v < total_nodes; ++v) {
    const auto gid = parse_number<long long>(trim(indicator.lines[v]), indicator.path,
                                             indicator.line_numbers[v]);
    if (gid < 1 || static_cast<std::size_t>(gid) > num_graphs) {
      throw ValidationError(indicator.path.filename().string() + ": graph id " +
                                std::to_string(gid) + " outside 1.." + std::to_string(num_graphs),
                            indicator.line_numbers[v]);
    }
    owner[v] = static_cast<std::uint32_t>(gid - 1);
    local[v] = static_cast<NodeId>(graph_sizes[owner[v]]++);
  }

  // Graph labels, remapped to 0..C-1 by ascending raw value.
  std::vector<long long> raw_labels(num_graphs);
  for (std::size_t g = 0; g < num_graphs; ++g) {
    raw_labels[g] = parse_number<long long>(trim(graph_labels.lines[g]), graph_labels.path,
                                            graph_labels.line_numbers[g]);
  }
  std::map<long long, int> label_index;
  for (auto l : raw_labels) label_index.emplace(l, 0);
  {
    int next = 0;
    for (auto& [raw, idx] : label_index) idx = next++;
  }

  // Directed edge records with their source line.
  struct Record {
    std::size_t u, v, line;
  };
  std::vector<Record> records;
  records.reserve(adjacency.lines.size());
  std::size_t self_loops = 0;
  for (std::size_t r = 0; r < adjacency.lines.size(); ++r) {
    const std::size_t line_no = adjacency.line_numbers[r];
    const auto fields = split_fields(adjacency.lines[r]);
    if (fields.size() != 2) {
      throw ValidationError(adjacency.path.filename().string() + ": expected 'u, v'", line_no);
    }
    const auto u = parse_number<long long>(fields[0], adjacency.path, line_no);
    const auto v = parse_number<long long>(fields[1], adjacency.path, line_no);
    for (long long x : {u, v}) {
      if (x < 1 || static_cast<std::size_t>(x) > total_nodes) {
        throw ValidationError(adjacency.path.filename().string() + ": dangling node index " +
                                  std::to_string(x),
                              line_no);
      }
    }
    const auto u0 = static_cast<std::size_t>(u - 1);
    const auto v0 = static_cast<std::size_t>(v - 1);
    if (owner[u0] != owner[v0]) {
      throw ValidationError(adjacency.path.filename().string() + ": edge joins nodes of graphs " +
                                std::to_string(owner[u0] + 1) + " and " +
                                std::to_string(owner[v0] + 1),
                            line_no);
    }
    if (u0 == v0) {
      ++self_loops;
      continue;
    }
    records.push_back({u0, v0, line_no});
  }
  if (self_loops) {
    std::clog << "warning: " << name << ": dropped " << self_loops << " self-loop record(s)\n";
  }

  std::stable_sort(records.begin(), records.end(), [](const Record& a, const Record& b) {
    return std::tie(a.u, a.v) < std::tie(b.u, b.v);
  });
  const auto dup_begin = std::unique(records.begin(), records.end(), [](const Record& a, const Record& b) {
    return a.u == b.u && a.v == b.v;
  });
  if (dup_begin != records.end()) {
    std::clog << "warning: " << name << ": removed " << (records.end() - dup_begin)
              << " duplicate edge record(s)\n";
    records.erase(dup_begin, records.end());
  }
  {
    // Report the earliest line whose reverse direction is missing.
    std::size_t bad_line = 0;
    for (const auto& rec : records) {
      const bool has_reverse = std::binary_search(
          records.begin(), records.end(), Record{rec.v, rec.u, 0},
          [](const Record& a, const Record& b) { return std::tie(a.u, a.v) < std::tie(b.u, b.v); });
      if (!has_reverse && (bad_line == 0 || rec.line < bad_line)) bad_line = rec.line;
    }
    if (bad_line) {
      throw ValidationError(adjacency.path.filename().string() +
                                ": asymmetric edge list, reverse edge missing",
                            bad_line);
    }
  }

  // Feature columns.
  std::vector<long long> raw_node_labels;
  std::map<long long, std::size_t> node_label_index;
  if (node_labels) {
    if (node_labels->lines.size() != total_nodes) {
      throw ValidationError(node_labels->path.filename().string() + ": expected " +
                            std::to_string(total_nodes) + " lines, found " +
                            std::to_string(node_labels->lines.size()));
    }
    raw_node_labels.resize(total_nodes);
    for (std::size_t v = 0; v < total_nodes; ++v) {
      raw_node_labels[v] = parse_number<long long>(trim(node_labels->lines[v]), node_labels->path,
                                                   node_labels->line_numbers[v]);
      node_label_index.emplace(raw_node_labels[v], 0);
    }
    std::size_t next = 0;
    for (auto& [raw, idx] : node_label_index) idx = next++;
  }
  std::size_t attr_cols = 0;
  std::vector<std::vector<double>> attrs;
  if (node_attrs) {
    if (node_attrs->lines.size() != total_nodes) {
      throw ValidationError(node_attrs->path.filename().string() + ": expected " +
                            std::to_string(total_nodes) + " lines, found " +
                            std::to_string(node_attrs->lines.size()));
    }
    attrs.resize(total_nodes);
    for (std::size_t v = 0; v < total_nodes; ++v) {
      const std::size_t line_no = node_attrs->line_numbers[v];
      for (auto field : split_fields(node_attrs->lines[v])) {
        attrs[v].push_back(parse_number<double>(field, node_attrs->path, line_no));
      }
      if (v == 0) attr_cols = attrs[v].size();
      if (attrs[v].size() != attr_cols) {
        throw ValidationError(node_attrs->path.filename().string() + ": inconsistent column count",
                              line_no);
      }
    }
  }
  const std::size_t label_cols = node_label_index.size();
  const bool constant_feature = !node_labels && !node_attrs;
  const std::size_t d = constant_feature ? 1 : label_cols + attr_cols;

  std::vector<Matrix> features(num_graphs);
  for (std::size_t g = 0; g < num_graphs; ++g) {
    features[g] = Matrix::Zero(static_cast<Eigen::Index>(graph_sizes[g]), static_cast<Eigen::Index>(d));
  }
  for (std::size_t v = 0; v < total_nodes; ++v) {
    auto row = features[owner[v]].row(local[v]);
    if (constant_feature) {
      row(0) = 1.0;
      continue;
    }
    if (node_labels) row(static_cast<Eigen::Index>(node_label_index.at(raw_node_labels[v]))) = 1.0;
    for (std::size_t c = 0; c < attr_cols; ++c) {
      row(static_cast<Eigen::Index>(label_cols + c)) = attrs[v][c];
    }
  }

  std::vector<std::vector<Edge>> edges(num_graphs);
  for (const auto& rec : records) {
    if (rec.u < rec.v) edges[owner[rec.u]].emplace_back(local[rec.u], local[rec.v]);
  }

  Dataset ds;
  ds.name = name;
  ds.num_features = d;
  ds.num_classes = label_index.size();
  ds.graphs.reserve(num_graphs);
  for (std::size_t g = 0; g < num_graphs; ++g) {
    ds.graphs.push_back(Graph::from_edges(graph_sizes[g], edges[g], std::move(features[g]),
                                          label_index.at(raw_labels[g])));
  }
  ds.validate();
  return ds;
}

void write_tu_dataset(const Dataset& ds, const fs::path& dir, const std::string& name) {
  fs::create_directories(dir);
  auto open = [&](const char* suffix) {
    std::ofstream out(dir / (name + suffix));
    if (!out) throw LoadError("cannot write " + (dir / (name + suffix)).string());
    out.precision(17);
    return out;
  };
  auto a = open("_A.txt");
  auto indicator = open("_graph_indicator.txt");
  auto labels = open("_graph_labels.txt");
  auto attrs = open("_node_attributes.txt");

  std::size_t base = 1;
  for (std::size_t g = 0; g < ds.graphs.size(); ++g) {
    const Graph& graph = ds.graphs[g];
    for (std::size_t i = 0; i < graph.num_nodes(); ++i) {
      for (NodeId j : graph.neighbors(static_cast<NodeId>(i))) {
        a << base + i << ", " << base + j << '\n';
      }
      indicator << g + 1 << '\n';
      const auto row = graph.features().row(static_cast<Eigen::Index>(i));
      for (Eigen::Index c = 0; c < row.size(); ++c) attrs << (c ? ", " : "") << row(c);
      attrs << '\n';
    }
    labels << graph.label() << '\n';
    base += graph.num_nodes();
  }
}

}  // namespace lightk
