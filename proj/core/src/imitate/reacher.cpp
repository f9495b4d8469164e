#include "bitrans/imitate/reacher.hpp"

#include <algorithm>
#include <fstream>
#include <string>

#include <json.hpp>

#include "bitrans/error.hpp"
#include "bitrans/ndcore/rng.hpp"

namespace bitrans::imitate {
namespace {

using nlohmann::json;

json vec_json(const nd::Vector& v) { return json(std::vector<double>(v.data(), v.data() + v.size())); }

json cols_json(const nd::Matrix& m) {
  json out = json::array();
  for (Eigen::Index c = 0; c < m.cols(); ++c) out.push_back(vec_json(m.col(c)));
  return out;
}

nd::Vector vec_from(const json& j, Eigen::Index dim, const std::string& field) {
  if (!j.is_array() || static_cast<Eigen::Index>(j.size()) != dim)
    throw ValidationError(field, "expected an array of " + std::to_string(dim) + " numbers");
  nd::Vector v(dim);
  for (Eigen::Index i = 0; i < dim; ++i) {
    if (!j[static_cast<std::size_t>(i)].is_number()) throw ValidationError(field, "non-numeric entry");
    v(i) = j[static_cast<std::size_t>(i)].get<double>();
  }
  return v;
}

nd::Matrix cols_from(const json& j, Eigen::Index dim, const std::string& field) {
  if (!j.is_array()) throw ValidationError(field, "expected an array of vectors");
  nd::Matrix m(dim, static_cast<Eigen::Index>(j.size()));
  for (std::size_t c = 0; c < j.size(); ++c) m.col(static_cast<Eigen::Index>(c)) = vec_from(j[c], dim, field);
  return m;
}

}  // namespace

void ReacherConfig::validate() const {
  if (!(workspace > 0.0)) throw ValidationError("env.workspace", "must be positive");
  if (!(a_max > 0.0)) throw ValidationError("env.a_max", "must be positive");
  if (start.size() != 2) throw ValidationError("env.start", "must be 2-D");
  for (const auto* box : {&train_goals, &oos_goals}) {
    if (box->size() != 2) throw ValidationError("env.goals", "goal boxes must be 2-D");
    for (const auto& iv : *box)
      if (!(iv.lo < iv.hi) || iv.lo < -workspace || iv.hi > workspace)
        throw ValidationError("env.goals", "goal box must be nonempty and inside the workspace");
  }
}

nd::Vector make_state(const nd::Vector& position, const nd::Vector& goal) {
  BITRANS_EXPECT(position.size() == 2 && goal.size() == 2, "make_state: position and goal are 2-D");
  nd::Vector s(kStateDim);
  s << position, goal;
  return s;
}

nd::Vector env_step(const ReacherConfig& config, const nd::Vector& state, const nd::Vector& action) {
  BITRANS_EXPECT(state.size() == kStateDim && action.size() == kActionDim, "env_step: bad state/action size");
  BITRANS_EXPECT(action.allFinite(), "env_step: non-finite action");
  nd::Vector next = state;
  for (Eigen::Index k = 0; k < 2; ++k) {
    const double a = std::clamp(action(k), -config.a_max, config.a_max);
    next(k) = std::clamp(state(k) + a, -config.workspace, config.workspace);
  }
  return next;
}

nd::Vector expert_action(const ReacherConfig& config, const nd::Vector& state) {
  BITRANS_EXPECT(state.size() == kStateDim, "expert_action: bad state size");
  nd::Vector a(kActionDim);
  for (Eigen::Index k = 0; k < 2; ++k) a(k) = std::clamp(state(2 + k) - state(k), -config.a_max, config.a_max);
  return a;
}

double goal_distance(const nd::Vector& state) { return (state.head<2>() - state.segment<2>(2)).norm(); }

nd::Matrix TrajectoryDataset::goals() const {
  nd::Matrix g(2, static_cast<Eigen::Index>(demos.size()));
  for (std::size_t i = 0; i < demos.size(); ++i) g.col(static_cast<Eigen::Index>(i)) = demos[i].goal;
  return g;
}

std::size_t TrajectoryDataset::horizon() const {
  if (demos.empty()) throw ValidationError("demos", "no demonstrations");
  const std::size_t T = demos.front().horizon();
  for (const auto& d : demos)
    if (d.horizon() != T) throw ValidationError("demos.horizon", "demonstrations have different horizons");
  return T;
}

TrajectoryDataset collect_demos(const ReacherConfig& config, std::size_t n, const funcgen::Box& goal_range,
                                std::uint64_t seed) {
  config.validate();
  if (n == 0) throw ValidationError("demos.n", "must be positive");
  TrajectoryDataset ds;
  ds.goal_range = goal_range;
  ds.seed = seed;
  nd::Rng rng(seed);
  const auto T = static_cast<Eigen::Index>(config.horizon);
  for (std::size_t i = 0; i < n; ++i) {
    Trajectory tr;
    tr.goal = funcgen::sample_region({goal_range}, rng);
    tr.states.resize(kStateDim, T + 1);
    tr.actions.resize(kActionDim, T);
    tr.states.col(0) = make_state(config.start, tr.goal);
    for (Eigen::Index t = 0; t < T; ++t) {
      tr.actions.col(t) = expert_action(config, tr.states.col(t));
      tr.states.col(t + 1) = env_step(config, tr.states.col(t), tr.actions.col(t));
    }
    ds.demos.push_back(std::move(tr));
  }
  return ds;
}

void write_demos_jsonl(const TrajectoryDataset& demos, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw RuntimeFailure("cannot open " + path.string() + " for writing");
  for (const auto& d : demos.demos)
    out << json{{"goal", vec_json(d.goal)}, {"states", cols_json(d.states)}, {"actions", cols_json(d.actions)}}.dump()
        << '\n';
  if (!out) throw RuntimeFailure("write failed: " + path.string());
}

TrajectoryDataset read_demos_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw RuntimeFailure("cannot open " + path.string());
  TrajectoryDataset ds;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const std::string where = "demos[" + std::to_string(lineno) + "]";
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw ValidationError(where, std::string("malformed JSON: ") + e.what());
    }
    if (!j.is_object() || !j.contains("goal") || !j.contains("states") || !j.contains("actions"))
      throw ValidationError(where, "expected goal, states and actions");
    Trajectory tr;
    tr.goal = vec_from(j["goal"], 2, where + ".goal");
    tr.states = cols_from(j["states"], kStateDim, where + ".states");
    tr.actions = cols_from(j["actions"], kActionDim, where + ".actions");
    if (tr.states.cols() != tr.actions.cols() + 1)
      throw ValidationError(where, "states must have exactly one more entry than actions");
    ds.demos.push_back(std::move(tr));
  }
  return ds;
}

}  // namespace bitrans::imitate
