#include <gtest/gtest.h>

#include <random>
#include <set>

#include "oracles.hpp"
#include "photobot/photo_env.hpp"

using namespace photobot;

namespace {

KeypointVector view(const Scene& s, RobotPose p) { return project_keypoints(s, p); }

int index_of(const std::vector<ActionSpec>& acts, ActionSpec a) {
  return static_cast<int>(std::find(acts.begin(), acts.end(), a) - acts.begin());
}

}  // namespace

TEST(Actions, CanonicalOrder) {
  const auto a = action_space(3);
  ASSERT_EQ(a.size(), 12u);
  EXPECT_EQ(a[0], (ActionSpec{ActionKind::Rotate, 1, 1}));
  EXPECT_EQ(a[2], (ActionSpec{ActionKind::Rotate, 1, 3}));
  EXPECT_EQ(a[3], (ActionSpec{ActionKind::Rotate, -1, 1}));
  EXPECT_EQ(a[6], (ActionSpec{ActionKind::Translate, 1, 1}));
  EXPECT_EQ(a[11], (ActionSpec{ActionKind::Translate, -1, 3}));
  EXPECT_EQ(to_string(a[7]), "translate+2");
  EXPECT_THROW(action_space(0), InvalidArgument);
}

TEST(Transition, MatchesIndependentEnumeration) {
  const Scene s;
  for (int levels : {1, 3}) {
    for (int i = 0; i < s.num_states(); ++i) {
      const RobotPose p = pose_from_index(s, i);
      for (const ActionSpec& a : action_space(levels)) {
        const RobotPose got = transition(p, a, s);
        const oracle::Cell c{p.ix, p.iy, p.yaw_index};
        const oracle::Cell want = a.kind == ActionKind::Rotate
                                      ? oracle::rotate(c, a.sign * a.level, s.n_yaw)
                                      : oracle::translate(c, a.sign * a.level, s.grid_nx, s.grid_ny, s.n_yaw);
        ASSERT_EQ((oracle::Cell{got.ix, got.iy, got.yaw_index}), want) << "state " << i << " " << to_string(a);
      }
    }
  }
}

TEST(Transition, Examples) {
  const Scene s;
  const ActionSpec fwd{ActionKind::Translate, 1, 1};
  EXPECT_EQ(transition({2, 2, 0}, fwd, s), (RobotPose{2, 3, 0}));
  EXPECT_EQ(transition({4, 4, 0}, fwd, s), (RobotPose{4, 4, 0}));
  EXPECT_EQ(transition({2, 2, 6}, fwd, s), (RobotPose{3, 2, 6}));   // 90 deg: +x
  EXPECT_EQ(transition({2, 2, 12}, fwd, s), (RobotPose{2, 1, 12}));  // 180 deg: -y
  EXPECT_EQ(transition({2, 2, 3}, fwd, s), (RobotPose{3, 3, 3}));   // 45 deg: diagonal
  EXPECT_EQ(transition({2, 2, 2}, fwd, s), (RobotPose{3, 3, 2}));   // 30 deg: sin = 1/2 rounds away
  EXPECT_EQ(transition({2, 2, 1}, fwd, s), (RobotPose{2, 3, 1}));   // 15 deg: sin < 1/2
  EXPECT_EQ(transition({0, 0, 23}, {ActionKind::Rotate, 1, 1}, s), (RobotPose{0, 0, 0}));
  EXPECT_EQ(transition({0, 0, 0}, {ActionKind::Rotate, -1, 3}, s), (RobotPose{0, 0, 21}));
}

TEST(Transition, StaysOnGrid) {
  const Scene s;
  for (int i = 0; i < s.num_states(); ++i)
    for (const ActionSpec& a : action_space(3)) EXPECT_TRUE(in_range(s, transition(pose_from_index(s, i), a, s)));
}

TEST(Reward, SpotValue) {
  KeypointVector a{std::vector<double>(28, 0.0)}, b = a;
  b.coords[0] = 400.0;
  EXPECT_NEAR(reward(a, b, 2.5e-3), std::exp(-1.0), 1e-12);
  EXPECT_DOUBLE_EQ(reward(a, a, 2.5e-3), 1.0);
}

TEST(Reward, Errors) {
  KeypointVector a{std::vector<double>(28, 0.0)}, b{std::vector<double>(26, 0.0)};
  EXPECT_THROW(reward(a, b, 2.5e-3), InvalidArgument);
  EXPECT_THROW(reward(a, a, 0.0), InvalidArgument);
}

TEST(Reward, MonotoneInDistance) {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(0.0, 640.0);
  KeypointVector g{std::vector<double>(28)};
  for (double& v : g.coords) v = u(rng);
  double prev_d = -1, prev_r = 2;
  for (double scale = 0.0; scale < 3.0; scale += 0.05) {
    KeypointVector k = g;
    for (double& v : k.coords) v += scale * 37.0;
    const double d = keypoint_distance(k, g), r = reward(k, g, 2.5e-3);
    EXPECT_GT(d, prev_d);
    EXPECT_LT(r, prev_r);
    prev_d = d;
    prev_r = r;
  }
}

TEST(StateIndex, Bijection) {
  const Scene s;
  std::set<int> seen;
  for (int i = 0; i < s.num_states(); ++i) {
    const RobotPose p = pose_from_index(s, i);
    EXPECT_EQ(state_index(s, p), i);
    seen.insert(i);
  }
  EXPECT_EQ(seen.size(), 600u);
  EXPECT_THROW(pose_from_index(s, 600), InvalidArgument);
}

TEST(Env, ResetValidatesTemplate) {
  PhotoEnv env(Scene{}, EnvConfig{});
  EXPECT_THROW(env.reset(KeypointVector{std::vector<double>(20)}, RobotPose{}), InvalidArgument);
}

TEST(Env, ResetAtMatchingPoseIsTerminal) {
  const Scene s;
  PhotoEnv env(s, EnvConfig{});
  env.reset(view(s, {1, 3, 0}), RobotPose{1, 3, 0});
  EXPECT_TRUE(env.done());
  EXPECT_DOUBLE_EQ(env.distance_px(), 0.0);
  EXPECT_DOUBLE_EQ(reward(env.current_keypoints(), env.goal(), 2.5e-3), 1.0);
  EXPECT_THROW(env.step(0), ProtocolViolation);
}

TEST(Env, StepBeforeResetIsAnError) {
  PhotoEnv env(Scene{}, EnvConfig{});
  EXPECT_THROW(env.step(0), ProtocolViolation);
}

TEST(Env, SampledResetIsDeterministicAndNeverMatching) {
  const Scene s;
  const KeypointVector goal = view(s, {1, 3, 0});
  PhotoEnv a(s, EnvConfig{}), b(s, EnvConfig{});
  Rng ra(42), rb(42);
  for (int i = 0; i < 200; ++i) {
    const Observation oa = a.reset(goal, ra), ob = b.reset(goal, rb);
    EXPECT_EQ(oa.flat(), ob.flat());
    EXPECT_FALSE(a.done());
  }
}

TEST(Env, FixedStartMode) {
  const Scene s;
  EnvConfig c;
  c.start = StartMode::Fixed;
  c.fixed_start = {3, 1, 5};
  PhotoEnv env(s, c);
  Rng rng(1);
  env.reset(view(s, {1, 3, 0}), rng);
  EXPECT_EQ(env.pose(), (RobotPose{3, 1, 5}));
}

TEST(Env, StepCapEndsEpisode) {
  const Scene s;
  PhotoEnv env(s, EnvConfig{});
  env.reset(view(s, {1, 3, 0}), RobotPose{0, 0, 12});
  StepResult r;
  // Facing away from the person: no view along the way can match.
  for (int i = 0; i < 30; ++i) {
    ASSERT_FALSE(env.done());
    r = env.step(ActionSpec{ActionKind::Translate, -1, 1});
  }
  EXPECT_TRUE(r.done);
  EXPECT_EQ(r.info.terminated_by, Termination::StepCap);
  EXPECT_EQ(r.info.steps, 30);
  EXPECT_THROW(env.step(0), ProtocolViolation);
}

TEST(Env, RewardUsesPostActionState) {
  const Scene s;
  const KeypointVector goal = view(s, {1, 3, 0});
  PhotoEnv env(s, EnvConfig{});
  env.reset(goal, RobotPose{1, 1, 0});
  const StepResult r = env.step(ActionSpec{ActionKind::Translate, -1, 1});
  EXPECT_DOUBLE_EQ(r.reward, reward(view(s, {1, 0, 0}), goal, 2.5e-3));
}

TEST(Env, MemoryIsOneHotMostRecentLast) {
  const Scene s;
  EnvConfig c;
  c.memory_len = 3;
  PhotoEnv env(s, c);
  Observation o = env.reset(view(s, {1, 3, 0}), RobotPose{4, 0, 12});
  ASSERT_EQ(o.memory.size(), 12u);
  for (double v : o.memory) EXPECT_EQ(v, 0.0);
  o = env.step(2).observation;
  o = env.step(1).observation;
  const std::vector<double> want{0, 0, 0, 0, 0, 0, 1, 0, 0, 1, 0, 0};
  EXPECT_EQ(o.memory, want);
  o = env.step(3).observation;
  o = env.step(0).observation;
  const std::vector<double> want2{0, 1, 0, 0, 0, 0, 0, 1, 1, 0, 0, 0};
  EXPECT_EQ(o.memory, want2);
  EXPECT_EQ(o.size(), env.observation_size());
}

// Rotate to bring the person to centre, translate to enlarge, rotate to
// finish; the match fires only on the last action.
TEST(Env, RotateTranslateRotateWalkthrough) {
  const Scene s;
  const KeypointVector goal = view(s, {2, 2, 1});
  PhotoEnv env(s, EnvConfig{});
  env.reset(goal, RobotPose{2, 0, 22});
  const std::vector<ActionSpec> plan{{ActionKind::Rotate, 1, 1},    {ActionKind::Rotate, 1, 1},
                                     {ActionKind::Translate, 1, 1}, {ActionKind::Translate, 1, 1},
                                     {ActionKind::Rotate, 1, 1}};
  for (std::size_t i = 0; i < plan.size(); ++i) {
    ASSERT_FALSE(env.done()) << "matched early at step " << i;
    const StepResult r = env.step(plan[i]);
    if (i + 1 < plan.size()) EXPECT_EQ(r.info.terminated_by, Termination::None);
    else EXPECT_EQ(r.info.terminated_by, Termination::Match);
  }
  EXPECT_EQ(env.pose(), (RobotPose{2, 2, 1}));
  EXPECT_EQ(index_of(env.actions(), plan[0]), 0);
}

TEST(Env, TraceCsvHeader) {
  std::ostringstream os;
  write_trace_csv(os, {{0, {1, 2, 3}, "", 0.5, 10.0, false}});
  EXPECT_EQ(os.str(), "step,ix,iy,yaw_index,action,reward,distance_px,done\n0,1,2,3,,0.5000000000,10.000000,0\n");
}
