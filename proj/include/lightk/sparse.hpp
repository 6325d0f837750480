#pragma once

#include <cstddef>
#include <vector>

#include "lightk/matrix.hpp"

namespace lightk {

/// Square CSR matrix of doubles.
struct CsrMatrix {
  std::size_t size = 0;
  std::vector<std::size_t> row_ptr{0};
  std::vector<NodeId> col_idx;
  std::vector<double> values;

  std::size_t nnz() const noexcept { return values.size(); }

  /// Returns this * x. `x` must have `size` rows.
  Matrix multiply(const Matrix& x) const;
  /// out = this * x, reusing `out`'s storage.
  void multiply_into(const Matrix& x, Matrix& out) const;

  Matrix to_dense() const;
  bool is_symmetric(double tol = 0.0) const;
};

}  // namespace lightk
