#pragma once

#include <cstdint>

#include <Eigen/Dense>

namespace lightk {

// Dense storage is row-major: one row per node, one column per channel.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using NodeId = std::uint32_t;

}  // namespace lightk
