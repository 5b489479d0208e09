#pragma once

#include <Eigen/Dense>

namespace fedtgan {

/// Row-major dense matrix; one row per table row or batch sample.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowVector = Eigen::Matrix<double, 1, Eigen::Dynamic>;

}  // namespace fedtgan
