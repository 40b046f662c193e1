#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>

namespace hierpool {

using Scalar = double;
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

}  // namespace hierpool
