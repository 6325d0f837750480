#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "lightk/autodiff.hpp"

namespace lightk {

// Text container mapping tensor names to shapes and row-major values:
//
//   lightk-checkpoint 1
//   <tensor count>
//   <name> <rows> <cols>
//   <row 0 values, space separated, 17 significant digits>
//   ...
//
// Names contain no whitespace. Readers reject unknown major versions.

using NamedTensor = std::pair<std::string, Matrix>;

void write_checkpoint(std::ostream& out, std::span<const Parameter* const> params);
std::vector<NamedTensor> read_checkpoint(std::istream& in);

void save_checkpoint(const std::filesystem::path& path, std::span<const Parameter* const> params);
std::vector<NamedTensor> load_checkpoint(const std::filesystem::path& path);

/// Copies tensors into parameters by name; throws on a missing name or shape
/// mismatch.
void restore_parameters(std::span<Parameter* const> params, const std::vector<NamedTensor>& tensors);

}  // namespace lightk
