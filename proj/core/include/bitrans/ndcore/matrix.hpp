#pragma once

#include <Eigen/Dense>

namespace bitrans::nd {

// Column-major doubles throughout. Batched inputs are stored one sample per
// column, so a layer is a single GEMM.
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

}  // namespace bitrans::nd
