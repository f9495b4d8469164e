#include "bitrans/ndcore/loss.hpp"

#include "bitrans/error.hpp"

namespace bitrans::nd {

LossResult mse_loss(const Matrix& pred, const Matrix& target) {
  BITRANS_EXPECT(pred.rows() == target.rows() && pred.cols() == target.cols(),
                 "mse_loss: shape mismatch");
  BITRANS_EXPECT(pred.size() > 0, "mse_loss: empty input");
  const double count = static_cast<double>(pred.size());
  LossResult r;
  Matrix diff = pred - target;
  r.value = diff.squaredNorm() / count;
  r.grad = (2.0 / count) * diff;
  return r;
}

}  // namespace bitrans::nd
