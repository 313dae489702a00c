#pragma once

#include <Eigen/Dense>
#include <cstdint>

namespace hstc {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using CountVector = Eigen::Matrix<std::int64_t, Eigen::Dynamic, 1>;
/// Rows are time bins, columns are circuits.
using CountMatrix = Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using IndexMatrix = Eigen::Matrix<int, Eigen::Dynamic, Eigen::Dynamic>;

}  // namespace hstc
