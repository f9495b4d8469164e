#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "bitrans/funcgen/dataset.hpp"
#include "bitrans/ndcore/matrix.hpp"

namespace bitrans::imitate {

/// Point reacher in the plane. State x = (p, g) in R^4: position, goal.
struct ReacherConfig {
  double workspace = 1.5;  // positions live in [-workspace, workspace]^2
  double a_max = 0.1;      // per-component action bound
  std::size_t horizon = 25;
  nd::Vector start = (nd::Vector(2) << 0.0, -0.5).finished();
  funcgen::Box train_goals = {{0.0, 1.0}, {0.0, 1.0}};
  funcgen::Box oos_goals = {{-1.0, 0.0}, {0.0, 1.0}};

  void validate() const;
};

inline constexpr Eigen::Index kStateDim = 4;
inline constexpr Eigen::Index kActionDim = 2;

nd::Vector make_state(const nd::Vector& position, const nd::Vector& goal);

/// p' = clip(p + clamp(a, +-a_max), workspace); goal unchanged.
nd::Vector env_step(const ReacherConfig& config, const nd::Vector& state, const nd::Vector& action);

/// clamp(g - p, +-a_max).
nd::Vector expert_action(const ReacherConfig& config, const nd::Vector& state);

double goal_distance(const nd::Vector& state);

/// states has horizon + 1 columns (the last is the terminal state);
/// actions has horizon columns, action t taken in state t.
struct Trajectory {
  nd::Vector goal;
  nd::Matrix states;
  nd::Matrix actions;

  std::size_t horizon() const { return static_cast<std::size_t>(actions.cols()); }
};

struct TrajectoryDataset {
  std::vector<Trajectory> demos;
  funcgen::Box goal_range;
  std::uint64_t seed = 0;

  /// Goals as columns.
  nd::Matrix goals() const;
  /// Throws ValidationError unless every demo has the same horizon.
  std::size_t horizon() const;
};

/// n expert rollouts from config.start to goals uniform in `goal_range`.
TrajectoryDataset collect_demos(const ReacherConfig& config, std::size_t n, const funcgen::Box& goal_range,
                                std::uint64_t seed);

/// One trajectory per line: {"goal":[..],"states":[[..],..],"actions":[[..],..]}.
void write_demos_jsonl(const TrajectoryDataset& demos, const std::filesystem::path& path);
TrajectoryDataset read_demos_jsonl(const std::filesystem::path& path);

}  // namespace bitrans::imitate
