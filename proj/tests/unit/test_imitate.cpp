#include <doctest.h>

#include <filesystem>

#include "bitrans/error.hpp"
#include "bitrans/imitate/reacher.hpp"
#include "bitrans/imitate/trajectory.hpp"

using namespace bitrans;
using namespace bitrans::imitate;
using nd::Vector;

TEST_CASE("expert reaches every training goal") {
  ReacherConfig cfg;
  const auto demos = collect_demos(cfg, 30, cfg.train_goals, 1);
  for (const auto& d : demos.demos) {
    CHECK(d.states.cols() == 26);
    CHECK(d.actions.cols() == 25);
    CHECK(goal_distance(d.states.col(d.states.cols() - 1)) < 1e-3);
    CHECK(d.actions.cwiseAbs().maxCoeff() <= cfg.a_max);
    CHECK((d.goal.array() >= 0.0).all());
    CHECK((d.goal.array() < 1.0).all());
  }
}

TEST_CASE("environment clamps actions and the workspace") {
  ReacherConfig cfg;
  const Vector s = make_state((Vector(2) << 1.45, 0.0).finished(), (Vector(2) << 0.0, 0.0).finished());
  const Vector next = env_step(cfg, s, (Vector(2) << 5.0, -5.0).finished());
  CHECK(next(0) == doctest::Approx(1.5));
  CHECK(next(1) == doctest::Approx(-0.1));
  CHECK(next(2) == 0.0);
}

TEST_CASE("demo JSONL round trip") {
  ReacherConfig cfg;
  const auto demos = collect_demos(cfg, 3, cfg.train_goals, 2);
  const auto path = std::filesystem::temp_directory_path() / "bitrans_demos_test.jsonl";
  write_demos_jsonl(demos, path);
  const auto back = read_demos_jsonl(path);
  std::filesystem::remove(path);
  REQUIRE(back.demos.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK((back.demos[i].states.array() == demos.demos[i].states.array()).all());
    CHECK((back.demos[i].actions.array() == demos.demos[i].actions.array()).all());
  }
}

TEST_CASE("invalid environment configs are rejected") {
  ReacherConfig cfg;
  cfg.a_max = 0.0;
  CHECK_THROWS_AS(cfg.validate(), ValidationError);
}

TEST_CASE("flattened demos pair each state with its action") {
  ReacherConfig cfg;
  const auto demos = collect_demos(cfg, 4, cfg.train_goals, 3);
  nd::Matrix s, a;
  flatten_demos(demos, s, a);
  CHECK(s.cols() == 4 * 25);
  CHECK(a.cols() == 4 * 25);
  CHECK((s.col(0).array() == demos.demos[0].states.col(0).array()).all());
}

TEST_CASE("transductive rollouts have the configured horizon and record their anchor") {
  ReacherConfig cfg;
  const auto demos = collect_demos(cfg, 5, cfg.train_goals, 4);
  transduce::TrainConfig tc;
  tc.arch.units = 16;
  tc.arch.segment = 4;
  tc.arch.fourier = false;
  tc.steps = 20;
  const auto pred = train_trajectory_transduction(demos, tc);
  nd::Rng rng(1);
  const auto r = rollout_transductive(cfg, pred, demos.demos[2].goal, demos, transduce::RhoPolicy::nearest(), rng);
  CHECK(r.trajectory.actions.cols() == 25);
  CHECK(r.anchor < 5u);
  CHECK(r.final_dist >= 0.0);
}
