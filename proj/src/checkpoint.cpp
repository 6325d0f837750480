#include "lightk/checkpoint.hpp"

#include <fstream>
#include <istream>
#include <ostream>
#include <unordered_map>

#include "lightk/errors.hpp"

namespace lightk {

namespace {
constexpr const char* kMagic = "lightk-checkpoint";
constexpr int kVersion = 1;
}  // namespace

void write_checkpoint(std::ostream& out, std::span<const Parameter* const> params) {
  const auto old = out.precision(17);
  out << kMagic << ' ' << kVersion << '\n' << params.size() << '\n';
  for (const Parameter* p : params) {
    out << p->name << ' ' << p->value.rows() << ' ' << p->value.cols() << '\n';
    for (Eigen::Index i = 0; i < p->value.rows(); ++i) {
      for (Eigen::Index j = 0; j < p->value.cols(); ++j) out << (j ? " " : "") << p->value(i, j);
      out << '\n';
    }
  }
  out.precision(old);
}

std::vector<NamedTensor> read_checkpoint(std::istream& in) {
  std::string magic;
  int version = 0;
  std::size_t count = 0;
  if (!(in >> magic >> version) || magic != kMagic) throw LoadError("checkpoint: bad header");
  if (version != kVersion) throw LoadError("checkpoint: unsupported version " + std::to_string(version));
  if (!(in >> count)) throw LoadError("checkpoint: missing tensor count");
  std::vector<NamedTensor> out;
  out.reserve(count);
  for (std::size_t t = 0; t < count; ++t) {
    std::string name;
    Eigen::Index rows = 0;
    Eigen::Index cols = 0;
    if (!(in >> name >> rows >> cols) || rows < 0 || cols < 0) {
      throw LoadError("checkpoint: bad tensor header #" + std::to_string(t));
    }
    Matrix m(rows, cols);
    for (Eigen::Index i = 0; i < m.size(); ++i) {
      if (!(in >> m.data()[i])) throw LoadError("checkpoint: truncated values for " + name);
    }
    out.emplace_back(std::move(name), std::move(m));
  }
  return out;
}

void save_checkpoint(const std::filesystem::path& path, std::span<const Parameter* const> params) {
  std::ofstream out(path);
  if (!out) throw LoadError("cannot write checkpoint " + path.string());
  write_checkpoint(out, params);
}

std::vector<NamedTensor> load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw LoadError("missing file: " + path.string());
  return read_checkpoint(in);
}

void restore_parameters(std::span<Parameter* const> params, const std::vector<NamedTensor>& tensors) {
  std::unordered_map<std::string, const Matrix*> by_name;
  for (const auto& [name, m] : tensors) by_name.emplace(name, &m);
  for (Parameter* p : params) {
    const auto it = by_name.find(p->name);
    if (it == by_name.end()) throw LoadError("checkpoint: missing tensor " + p->name);
    if (it->second->rows() != p->value.rows() || it->second->cols() != p->value.cols()) {
      throw ShapeError("checkpoint: shape mismatch for " + p->name);
    }
    p->value = *it->second;
  }
}

}  // namespace lightk
