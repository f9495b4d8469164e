#pragma once

#include <cstddef>
#include <optional>
#include <string_view>

#include "bitrans/ndcore/dense_net.hpp"
#include "bitrans/ndcore/matrix.hpp"
#include "bitrans/ndcore/rng.hpp"
#include "bitrans/transduce/anchors.hpp"
#include "bitrans/transduce/delta_bank.hpp"
#include "bitrans/transduce/training.hpp"

namespace bitrans::transduce {

enum class BaselineKind {
  linear,               // one affine layer x -> y
  mlp,                  // plain MLP x -> y
  concat_transduction,  // MLP on [x_i - x_j; x_j], anchors as in bilinear transduction
  deepsets,             // observation and goal branches summed, one-hidden-layer head
};

std::string_view to_string(BaselineKind kind);
BaselineKind baseline_from_string(std::string_view name);

/// Contiguous block of input coordinates holding the goal (deepsets only).
struct GoalSlice {
  std::size_t begin = 0;
  std::size_t size = 0;
};

struct BaselineConfig {
  TrainConfig train;  // arch.hidden_layers / units / fourier apply to every net
  std::optional<GoalSlice> goal;
};

struct BaselineModel {
  BaselineKind kind = BaselineKind::mlp;
  nd::DenseNet net;  // linear, mlp, concat_transduction
  // deepsets
  nd::DenseNet obs_branch;
  nd::DenseNet goal_branch;
  nd::DenseNet head;
  GoalSlice goal;

  std::size_t input_dim() const;

  /// Direct prediction, one column per query. Not valid for
  /// concat_transduction, which needs anchors (see predict_concat).
  nd::Matrix predict(const nd::Matrix& x) const;
  /// concat_transduction on explicit (delta, anchor) columns.
  nd::Matrix predict_pairs(const nd::Matrix& deltas, const nd::Matrix& anchors) const;
};

/// Trains with minibatch Adam on the MSE. Samples are drawn uniformly for
/// the direct models and as ordered pairs (i, j != i) for concat_transduction.
/// Throws ValidationError for deepsets without a goal slice.
BaselineModel train_baseline(BaselineKind kind, const nd::Matrix& xs, const nd::Matrix& ys,
                             const BaselineConfig& config, TrainStats* stats = nullptr);

/// concat_transduction prediction with an anchor drawn uniformly from I(x).
nd::Matrix predict_concat(const BaselineModel& model, const nd::Matrix& x_test, const nd::Matrix& train_xs,
                          const DeltaBank& bank, const RhoPolicy& policy, nd::Rng& rng);

}  // namespace bitrans::transduce
