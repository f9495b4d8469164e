#include "bitrans/imitate/trajectory.hpp"

#include "bitrans/error.hpp"
#include "bitrans/transduce/delta_bank.hpp"

namespace bitrans::imitate {

transduce::BilinearPredictor train_trajectory_transduction(const TrajectoryDataset& demos,
                                                           const transduce::TrainConfig& config,
                                                           transduce::TrainStats* stats) {
  config.validate();
  if (demos.demos.size() < 2) throw ValidationError("demos.n", "trajectory transduction needs >= 2 demos");
  const std::size_t T = demos.horizon();
  if (T == 0) throw ValidationError("demos.horizon", "must be positive");

  nd::Rng rng(config.seed);
  transduce::BilinearTrainer trainer(transduce::make_bilinear(kStateDim, kActionDim, config.arch, rng), config.adam,
                                     config.l2);
  transduce::TrainStats local;
  transduce::TrainStats& st = stats ? *stats : local;
  st.step_losses.reserve(config.steps);
  const auto B = static_cast<Eigen::Index>(config.batch);
  const std::size_t n = demos.demos.size();
  nd::Matrix deltas(kStateDim, B), anchors(kStateDim, B), targets(kActionDim, B);
  for (std::size_t s = 0; s < config.steps; ++s) {
    trainer.set_lr(config.lr_at(s));
    for (Eigen::Index b = 0; b < B; ++b) {
      const std::size_t i = rng.index(n);
      std::size_t j = rng.index(n - 1);
      if (j >= i) ++j;
      const auto t = static_cast<Eigen::Index>(rng.index(T));
      const Trajectory& ti = demos.demos[i];
      const Trajectory& tj = demos.demos[j];
      deltas.col(b) = tj.states.col(t) - ti.states.col(t);
      anchors.col(b) = ti.states.col(t);
      targets.col(b) = tj.actions.col(t);
    }
    st.step_losses.push_back(trainer.step(deltas, anchors, targets));
  }
  st.finish();
  return trainer.release();
}

void flatten_demos(const TrajectoryDataset& demos, nd::Matrix& states, nd::Matrix& actions) {
  Eigen::Index total = 0;
  for (const auto& d : demos.demos) total += d.actions.cols();
  states.resize(kStateDim, total);
  actions.resize(kActionDim, total);
  Eigen::Index c = 0;
  for (const auto& d : demos.demos) {
    const Eigen::Index T = d.actions.cols();
    states.middleCols(c, T) = d.states.leftCols(T);
    actions.middleCols(c, T) = d.actions;
    c += T;
  }
}

Rollout rollout_transductive(const ReacherConfig& config, const transduce::BilinearPredictor& pred,
                             const nd::Vector& goal, const TrajectoryDataset& demos,
                             const transduce::RhoPolicy& policy, nd::Rng& rng) {
  BITRANS_EXPECT(goal.size() == 2, "rollout_transductive: goal must be 2-D");
  if (demos.demos.empty()) throw ValidationError("demos", "no demonstrations to anchor on");
  const nd::Matrix goals = demos.goals();
  Rollout r;
  if (demos.demos.size() == 1) {
    r.anchor = 0;
  } else {
    const transduce::DeltaBank bank = transduce::DeltaBank::build(goals, transduce::kDefaultBankCap, demos.seed);
    const transduce::AnchorSet set = transduce::select_anchors(goal, goals, bank, policy);
    r.anchor = set.indices[rng.index(set.indices.size())];
  }
  const Trajectory& anchor = demos.demos[r.anchor];
  const auto T = static_cast<Eigen::Index>(config.horizon);
  BITRANS_EXPECT(static_cast<Eigen::Index>(anchor.horizon()) >= T, "rollout_transductive: anchor demo too short");
  r.trajectory.goal = goal;
  r.trajectory.states.resize(kStateDim, T + 1);
  r.trajectory.actions.resize(kActionDim, T);
  r.trajectory.states.col(0) = make_state(config.start, goal);
  for (Eigen::Index t = 0; t < T; ++t) {
    const nd::Vector s = r.trajectory.states.col(t);
    const nd::Vector a = transduce::bilinear_forward(pred, s - anchor.states.col(t), anchor.states.col(t));
    r.trajectory.actions.col(t) = a;
    r.trajectory.states.col(t + 1) = env_step(config, s, a);
  }
  r.final_dist = goal_distance(r.trajectory.states.col(T));
  return r;
}

Rollout rollout_direct(const ReacherConfig& config, const transduce::BaselineModel& policy, const nd::Vector& goal) {
  BITRANS_EXPECT(goal.size() == 2, "rollout_direct: goal must be 2-D");
  const auto T = static_cast<Eigen::Index>(config.horizon);
  Rollout r;
  r.trajectory.goal = goal;
  r.trajectory.states.resize(kStateDim, T + 1);
  r.trajectory.actions.resize(kActionDim, T);
  r.trajectory.states.col(0) = make_state(config.start, goal);
  for (Eigen::Index t = 0; t < T; ++t) {
    const nd::Vector s = r.trajectory.states.col(t);
    const nd::Vector a = policy.predict(nd::Matrix(s)).col(0);
    r.trajectory.actions.col(t) = a;
    r.trajectory.states.col(t + 1) = env_step(config, s, a);
  }
  r.final_dist = goal_distance(r.trajectory.states.col(T));
  return r;
}

}  // namespace bitrans::imitate
