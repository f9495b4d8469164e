#pragma once

#include <vector>

#include "bitrans/ndcore/matrix.hpp"
#include "bitrans/ndcore/rng.hpp"
#include "bitrans/transduce/bilinear.hpp"
#include "bitrans/transduce/training.hpp"

namespace bitrans::transduce {

/// Nonnegative weight for transducing from anchor x' across difference dx.
class PairWeighter {
 public:
  virtual ~PairWeighter() = default;
  /// One weight per column of (deltas, anchors).
  virtual nd::Vector weights(const nd::Matrix& deltas, const nd::Matrix& anchors) const = 0;
};

class ConstantWeights final : public PairWeighter {
 public:
  explicit ConstantWeights(double value = 1.0) : value_(value) {}
  nd::Vector weights(const nd::Matrix& deltas, const nd::Matrix&) const override {
    return nd::Vector::Constant(deltas.cols(), value_);
  }

 private:
  double value_;
};

/// Scalar bilinear predictor (K = 1) squashed by the logistic function, so
/// omega(dx, x') lies in (0, 1).
class WeightingFunction final : public PairWeighter {
 public:
  WeightingFunction() = default;
  explicit WeightingFunction(BilinearPredictor net);

  const BilinearPredictor& net() const { return net_; }
  BilinearPredictor& net() { return net_; }

  nd::Vector weights(const nd::Matrix& deltas, const nd::Matrix& anchors) const override;
  double operator()(const nd::Vector& delta, const nd::Vector& anchor) const;

 private:
  BilinearPredictor net_;
};

/// Supervision for omega: transduce from `anchor` (x_i) to `query` (x_j)?
/// The network input is (x_j - x_i, x_i).
struct LabeledPair {
  nd::Vector anchor;
  nd::Vector query;
  double label = 0.0;  // 0 or 1
};

/// Fits omega by MSE between its output and the binary labels. A training
/// set with only one class still trains but records a warning in `stats`.
WeightingFunction train_weighting(const std::vector<LabeledPair>& pairs, const TrainConfig& config,
                                  TrainStats* stats = nullptr);

enum class WeightedSampling {
  /// Uniform pairs, each loss term multiplied by omega (the literal
  /// weighted objective; with omega == 1 this is train_bilinear exactly).
  weight_loss,
  /// Pairs drawn with probability proportional to omega from a precomputed
  /// pool, unweighted loss. Same objective up to a constant factor, with far
  /// less gradient noise when omega is sparse.
  proportional,
};

struct WeightedConfig {
  TrainConfig train;
  WeightedSampling sampling = WeightedSampling::weight_loss;
  std::size_t pool_cap = 250000;  // proportional: max ordered pairs scored
  /// Interleave omega updates on `labels` with predictor updates.
  bool joint = false;
};

/// Two-phase weighted transduction: omega is fixed (pretrained) and the
/// predictor minimises sum_i sum_{j != i} omega(x_i - x_j, x_j) l(h(x_i - x_j, x_j), y_i)
/// (+ l2 ||theta||^2). Throws RuntimeFailure if omega is ~0 on all pairs.
BilinearPredictor train_weighted(const nd::Matrix& xs, const nd::Matrix& ys, const PairWeighter& omega,
                                 const WeightedConfig& config, TrainStats* stats = nullptr);

/// Joint variant: each step updates omega on its labels, then the predictor
/// with the current omega. `omega` is modified in place.
BilinearPredictor train_weighted_joint(const nd::Matrix& xs, const nd::Matrix& ys, WeightingFunction& omega,
                                       const std::vector<LabeledPair>& labels, const WeightedConfig& config,
                                       TrainStats* stats = nullptr);

enum class WeightedAnchor { argmax, sample };

/// argmax_i omega(x_test - x_i, x_i) (lowest index on ties), or a draw with
/// probability proportional to omega.
std::size_t select_weighted_anchor(const PairWeighter& omega, const nd::Vector& x_test,
                                   const nd::Matrix& train_xs, WeightedAnchor mode = WeightedAnchor::argmax,
                                   nd::Rng* rng = nullptr);

nd::Vector predict_weighted(const BilinearPredictor& pred, const PairWeighter& omega, const nd::Vector& x_test,
                            const nd::Matrix& train_xs, WeightedAnchor mode = WeightedAnchor::argmax,
                            nd::Rng* rng = nullptr);

nd::Matrix predict_weighted_batch(const BilinearPredictor& pred, const PairWeighter& omega,
                                  const nd::Matrix& x_test, const nd::Matrix& train_xs,
                                  WeightedAnchor mode = WeightedAnchor::argmax, nd::Rng* rng = nullptr);

}  // namespace bitrans::transduce
