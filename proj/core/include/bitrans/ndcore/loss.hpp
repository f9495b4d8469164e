#pragma once

#include "bitrans/ndcore/matrix.hpp"

namespace bitrans::nd {

struct LossResult {
  double value = 0.0;
  Matrix grad;  // d value / d pred, same shape as pred
};

/// Mean of squared differences over every entry (components x samples).
/// For a single column this is the per-component MSE with grad 2(p - t)/d.
LossResult mse_loss(const Matrix& pred, const Matrix& target);

}  // namespace bitrans::nd
