#include <gtest/gtest.h>

#include <numeric>
#include <sstream>

#include "photobot/oracle.hpp"

using namespace photobot;

namespace {

constexpr double kAlpha = 2.5e-3;

struct Fixture {
  Scene scene;
  std::shared_ptr<const KeypointTable> table = std::make_shared<const KeypointTable>(scene);
  KeypointVector goal = project_keypoints(scene, {1, 3, 0});
  GoalPredicate region = match_region(table, goal, 40.0);
};

}  // namespace

TEST(BestState, OnGridTemplateFindsItself) {
  Fixture f;
  const OracleResult r = best_state(*f.table, f.goal, kAlpha);
  EXPECT_EQ(r.best_pose, (RobotPose{1, 3, 0}));
  EXPECT_DOUBLE_EQ(r.best_reward, 1.0);
  EXPECT_EQ(r.rewards.size(), 600u);
}

// An off-grid viewpoint cannot be reproduced exactly; the optimum agrees with
// a plain scan written here.
TEST(BestState, OffGridTemplateAgreesWithScan) {
  Fixture f;
  const KeypointVector goal =
      project_person(f.scene, 0.5 * f.scene.spacing_m, 1.5 * f.scene.spacing_m, deg2rad(7.0), f.scene.camera).keypoints;
  const OracleResult r = best_state(*f.table, goal, kAlpha);
  EXPECT_LT(r.best_reward, 1.0);
  double best = -1;
  int best_i = -1;
  for (int i = 0; i < 600; ++i) {
    const KeypointVector k = project_keypoints(f.scene, pose_from_index(f.scene, i));
    double sq = 0;
    for (std::size_t j = 0; j < k.coords.size(); ++j) sq += std::pow(k.coords[j] - goal.coords[j], 2);
    const double rw = std::exp(-kAlpha * std::sqrt(sq));
    if (rw > best) {
      best = rw;
      best_i = i;
    }
  }
  EXPECT_NEAR(r.best_reward, best, 1e-12);
  EXPECT_EQ(state_index(f.scene, r.best_pose), best_i);
}

TEST(Bfs, CoversEveryStateWithinTheCap) {
  Fixture f;
  for (int levels : {1, 3}) {
    for (int i = 0; i < 600; i += 37) {
      const auto d = bfs_depths(f.scene, pose_from_index(f.scene, i), levels);
      for (int v : d) {
        EXPECT_GE(v, 0);
        EXPECT_LE(v, 30);
      }
    }
  }
}

TEST(ShortestPath, OneStepForward) {
  Fixture f;
  const auto target = [](const RobotPose& p) { return p == RobotPose{2, 3, 0}; };
  const auto path = shortest_path(f.scene, {2, 2, 0}, target, 1);
  ASSERT_EQ(path.size(), 1u);
  EXPECT_EQ(path[0], (ActionSpec{ActionKind::Translate, 1, 1}));
}

TEST(ShortestPath, EmptyAtGoalAndNoPathWhenUnreachable) {
  Fixture f;
  EXPECT_TRUE(shortest_path(f.scene, {1, 3, 0}, f.region, 1).empty());
  EXPECT_THROW(shortest_path(f.scene, {0, 0, 0}, [](const RobotPose&) { return false; }, 1), NoPath);
  EXPECT_THROW(shortest_path(f.scene, {9, 0, 0}, f.region, 1), InvalidArgument);
}

// Every path actually lands in the goal set, and its length is the BFS depth
// of the nearest goal state.
TEST(ShortestPath, ConsistentWithBfsDepths) {
  Fixture f;
  for (int i = 0; i < 600; i += 7) {
    const RobotPose start = pose_from_index(f.scene, i);
    const auto path = shortest_path(f.scene, start, f.region, 1);
    RobotPose p = start;
    for (const ActionSpec& a : path) p = transition(p, a, f.scene);
    EXPECT_TRUE(f.region(p));
    const auto d = bfs_depths(f.scene, start, 1);
    int nearest = 1000;
    for (int j = 0; j < 600; ++j)
      if (f.region(pose_from_index(f.scene, j))) nearest = std::min(nearest, d[j]);
    EXPECT_EQ(static_cast<int>(path.size()), nearest);
    EXPECT_LE(path.size(), 30u);
  }
}

TEST(PathLengths, HistogramSumsToAllStates) {
  Fixture f;
  const auto lengths = path_lengths(f.scene, f.region, 1);
  const auto h = histogram(lengths);
  int total = 0;
  for (const auto& [len, n] : h) {
    EXPECT_GE(len, 0);
    total += n;
  }
  EXPECT_EQ(total, 600);
}

TEST(OracleController, FollowsShortestPaths) {
  Fixture f;
  PhotoEnv env(f.table, EnvConfig{});
  const Controller ctl = oracle_controller(f.region);
  const auto lengths = path_lengths(f.scene, f.region, 1);
  Rng rng(1);
  for (int i = 0; i < 600; i += 11) {
    const RobotPose start = pose_from_index(f.scene, i);
    const Observation o = env.reset(f.goal, start);
    const EpisodeOutcome ep = run_episode(env, o, ctl, rng);
    EXPECT_TRUE(ep.success);
    EXPECT_EQ(ep.actions, lengths[i]);
  }
}

TEST(OracleController, BeatsRandom) {
  Fixture f;
  PhotoEnv env(f.table, EnvConfig{});
  Rng a(3), b(3);
  const EvalStats o = evaluate(env, f.goal, 200, oracle_controller(f.region), a);
  const EvalStats r = evaluate(env, f.goal, 200, random_controller(), b);
  EXPECT_DOUBLE_EQ(o.success_rate, 1.0);
  EXPECT_LT(r.success_rate, o.success_rate);
  EXPECT_GT(r.mean_actions, o.mean_actions);
}

TEST(Greedy, MatchingStartTakesNoActions) {
  Fixture f;
  const GreedyTrace g = greedy_baseline(*f.table, f.goal, {1, 3, 0}, EnvConfig{});
  EXPECT_TRUE(g.actions.empty());
  EXPECT_EQ(g.stop, GreedyStop::Match);
  EXPECT_EQ(g.trace.size(), 1u);
}

TEST(Greedy, NeverRevisitsAndStopsWithin30) {
  Fixture f;
  for (int i = 0; i < 600; i += 13) {
    const GreedyTrace g = greedy_baseline(*f.table, f.goal, pose_from_index(f.scene, i), EnvConfig{});
    EXPECT_LE(g.actions.size(), 30u);
    std::set<int> seen;
    for (const TraceRow& row : g.trace) EXPECT_TRUE(seen.insert(state_index(f.scene, row.pose)).second);
    if (g.stop == GreedyStop::Match) {
      EXPECT_TRUE(f.region(g.trace.back().pose));
    }
  }
}

TEST(RewardTable, SixHundredRows) {
  Fixture f;
  std::ostringstream os;
  write_reward_table_csv(os, f.scene, best_state(*f.table, f.goal, kAlpha));
  const std::string s = os.str();
  EXPECT_EQ(std::count(s.begin(), s.end(), '\n'), 601);
  EXPECT_EQ(s.rfind("ix,iy,yaw_index,reward\n", 0), 0u);
}
