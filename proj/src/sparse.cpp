#include "lightk/sparse.hpp"

#include <algorithm>
#include <cmath>

#include "lightk/errors.hpp"

namespace lightk {

Matrix CsrMatrix::multiply(const Matrix& x) const {
  Matrix out;
  multiply_into(x, out);
  return out;
}

void CsrMatrix::multiply_into(const Matrix& x, Matrix& out) const {
  if (static_cast<std::size_t>(x.rows()) != size) {
    throw ShapeError("spmm: operator is " + std::to_string(size) + "x" + std::to_string(size) +
                     ", input has " + std::to_string(x.rows()) + " rows");
  }
  out.resize(x.rows(), x.cols());
  const auto cols = x.cols();
  for (std::size_t i = 0; i < size; ++i) {
    double* dst = out.data() + static_cast<Eigen::Index>(i) * cols;
    std::fill(dst, dst + cols, 0.0);
    for (std::size_t p = row_ptr[i]; p < row_ptr[i + 1]; ++p) {
      const double a = values[p];
      const double* src = x.data() + static_cast<Eigen::Index>(col_idx[p]) * cols;
      for (Eigen::Index c = 0; c < cols; ++c) dst[c] += a * src[c];
    }
  }
}

Matrix CsrMatrix::to_dense() const {
  Matrix d = Matrix::Zero(static_cast<Eigen::Index>(size), static_cast<Eigen::Index>(size));
  for (std::size_t i = 0; i < size; ++i) {
    for (std::size_t p = row_ptr[i]; p < row_ptr[i + 1]; ++p) {
      d(static_cast<Eigen::Index>(i), col_idx[p]) += values[p];
    }
  }
  return d;
}

bool CsrMatrix::is_symmetric(double tol) const {
  auto lookup = [&](std::size_t i, NodeId j) {
    const auto first = col_idx.begin() + static_cast<std::ptrdiff_t>(row_ptr[i]);
    const auto last = col_idx.begin() + static_cast<std::ptrdiff_t>(row_ptr[i + 1]);
    const auto it = std::lower_bound(first, last, j);
    return (it != last && *it == j) ? values[static_cast<std::size_t>(it - col_idx.begin())] : 0.0;
  };
  for (std::size_t i = 0; i < size; ++i) {
    for (std::size_t p = row_ptr[i]; p < row_ptr[i + 1]; ++p) {
      if (std::abs(values[p] - lookup(col_idx[p], static_cast<NodeId>(i))) > tol) return false;
    }
  }
  return true;
}

}  // namespace lightk
