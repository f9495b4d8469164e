#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "bitrans/ndcore/adam.hpp"
#include "bitrans/ndcore/matrix.hpp"
#include "bitrans/ndcore/rng.hpp"
#include "bitrans/transduce/anchors.hpp"
#include "bitrans/transduce/bilinear.hpp"
#include "bitrans/transduce/delta_bank.hpp"

namespace bitrans::transduce {

enum class LrSchedule {
  constant,
  /// lr * (f + (1 - f) * (1 + cos(pi * s / steps)) / 2) with f = lr_final_frac.
  cosine,
};

struct TrainConfig {
  ArchConfig arch;
  std::size_t batch = 32;
  std::size_t steps = 20000;
  nd::AdamOptions adam;  // lr 1e-4 unless overridden
  LrSchedule schedule = LrSchedule::constant;
  double lr_final_frac = 0.0;
  double l2 = 0.0;  // Reg(theta) = l2 * ||theta||^2
  std::uint64_t seed = 0;

  void validate() const;
  /// Learning rate for zero-based step `s`.
  double lr_at(std::size_t s) const;
};

struct TrainStats {
  std::vector<double> step_losses;
  double final_loss = 0.0;  // mean of the last min(100, steps) batch losses
  std::vector<std::string> warnings;

  void finish();
};

/// How the scalar bilinear output is mapped before the loss.
enum class OutputLink { identity, logistic };

/// Owns a predictor and its Adam state; one call to step() is one update on
/// the loss  sum_b w_b * ||link(h(dx_b, x'_b)) - y_b||^2 / (K B)  (+ Reg).
/// Without weights every w_b is 1.0 and the arithmetic is otherwise identical.
class BilinearTrainer {
 public:
  BilinearTrainer(BilinearPredictor init, nd::AdamOptions adam, double l2 = 0.0,
                  OutputLink link = OutputLink::identity);

  double step(const nd::Matrix& deltas, const nd::Matrix& anchors, const nd::Matrix& targets,
              const nd::Vector* weights = nullptr);

  void set_lr(double lr) { adam_.set_lr(lr); }

  const BilinearPredictor& predictor() const { return pred_; }
  BilinearPredictor release() { return std::move(pred_); }

 private:
  BilinearPredictor pred_;
  nd::AdamState adam_;
  double l2_;
  OutputLink link_;
};

struct PairBatch {
  nd::Matrix deltas;   // x_i - x_j
  nd::Matrix anchors;  // x_j
  nd::Matrix targets;  // y_i
};

/// Draws `batch` ordered pairs (i, j != i) uniformly.
PairBatch sample_pairs(const nd::Matrix& xs, const nd::Matrix& ys, std::size_t batch, nd::Rng& rng);

/// Minimises sum_i sum_{j != i} l(h(x_i - x_j, x_j), y_i) with uniform pair
/// minibatches and Adam. Deterministic in (xs, ys, config).
BilinearPredictor train_bilinear(const nd::Matrix& xs, const nd::Matrix& ys, const TrainConfig& config,
                                 TrainStats* stats = nullptr);

enum class AnchorDraw { uniform, average };

/// h(x_test - x_i, x_i) with i drawn uniformly from I(x_test), or the mean
/// over I(x_test) under AnchorDraw::average.
nd::Vector predict_transductive(const BilinearPredictor& pred, const nd::Vector& x_test,
                                const nd::Matrix& train_xs, const DeltaBank& bank,
                                const RhoPolicy& policy, nd::Rng& rng,
                                AnchorDraw draw = AnchorDraw::uniform);

/// Column-wise predict_transductive with one batched network evaluation.
nd::Matrix predict_transductive_batch(const BilinearPredictor& pred, const nd::Matrix& x_test,
                                      const nd::Matrix& train_xs, const DeltaBank& bank,
                                      const RhoPolicy& policy, nd::Rng& rng,
                                      AnchorDraw draw = AnchorDraw::uniform);

/// Anchor index chosen for each query under AnchorDraw::uniform.
std::vector<std::size_t> draw_anchors(const nd::Matrix& x_test, const nd::Matrix& train_xs,
                                      const DeltaBank& bank, const RhoPolicy& policy, nd::Rng& rng);

}  // namespace bitrans::transduce
