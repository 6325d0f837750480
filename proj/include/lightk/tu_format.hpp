#pragma once

#include <filesystem>
#include <string>

#include "lightk/graph.hpp"

namespace lightk {

/// Loads a dataset in the TU benchmark layout.
///
/// Looks for `<root>/<name>/<name>_A.txt` first and falls back to
/// `<root>/<name>_A.txt`. Node indices in the files are 1-based.
///
/// Features: one-hot node labels (columns ordered by ascending raw label)
/// followed by node attributes. When neither file exists every node gets a
/// single constant feature 1. Raw graph labels are mapped to 0..C-1 in
/// ascending order.
///
/// Throws LoadError when a required file is missing and ValidationError
/// (with the 1-based line number) on malformed, dangling, cross-graph or
/// asymmetric edge records.
Dataset load_tu_dataset(const std::filesystem::path& root, const std::string& name);

/// Writes `ds` into `<dir>/<name>_*.txt`: edges in both directions, graph
/// indicator, graph labels, and every feature column as a node attribute.
/// Reloading reproduces the graphs exactly (values are printed with 17
/// significant digits).
void write_tu_dataset(const Dataset& ds, const std::filesystem::path& dir, const std::string& name);

}  // namespace lightk
