#pragma once

#include <cstddef>

#include "bitrans/imitate/reacher.hpp"
#include "bitrans/ndcore/rng.hpp"
#include "bitrans/transduce/anchors.hpp"
#include "bitrans/transduce/baselines.hpp"
#include "bitrans/transduce/bilinear.hpp"
#include "bitrans/transduce/training.hpp"

namespace bitrans::imitate {

/// Each batch element draws demos i != j and a time t, and fits
/// h(s_t^j - s_t^i, s_t^i) -> a_t^j.
transduce::BilinearPredictor train_trajectory_transduction(const TrajectoryDataset& demos,
                                                           const transduce::TrainConfig& config,
                                                           transduce::TrainStats* stats = nullptr);

/// All (state, action) pairs of all demos, for direct policies.
void flatten_demos(const TrajectoryDataset& demos, nd::Matrix& states, nd::Matrix& actions);

struct Rollout {
  Trajectory trajectory;
  std::size_t anchor = 0;  // demo index used for transduction (0 for direct policies)
  double final_dist = 0.0;
};

/// The anchor demo is drawn uniformly from the demos whose goals pass the
/// anchor test against the goal-difference bank, then held for the whole
/// rollout: a_t = h(s_t - s_t^i, s_t^i) with s_t the live state.
Rollout rollout_transductive(const ReacherConfig& config, const transduce::BilinearPredictor& pred,
                             const nd::Vector& goal, const TrajectoryDataset& demos,
                             const transduce::RhoPolicy& policy, nd::Rng& rng);

/// Closed-loop rollout of a direct policy a_t = pi(s_t).
Rollout rollout_direct(const ReacherConfig& config, const transduce::BaselineModel& policy, const nd::Vector& goal);

}  // namespace bitrans::imitate
