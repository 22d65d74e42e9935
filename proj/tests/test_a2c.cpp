#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "photobot/a2c.hpp"
#include "photobot/oracle.hpp"

using namespace photobot;

namespace {

TrainConfig small_config(int updates) {
  TrainConfig c;
  c.total_updates = updates;
  c.hidden = {16, 16};
  c.log_interval = 10;
  c.stats_window = 50;
  return c;
}

KeypointVector fixture_goal(const Scene& s) { return project_keypoints(s, {1, 3, 0}); }

}  // namespace

// Hand-worked returns: one env runs through an episode end, the other
// bootstraps from its final value.
TEST(Returns, HandComputed) {
  RolloutBuffer b(2, 3);
  b.rewards = {1.0, 2.0, 3.0, 0.5, 0.0, 1.0};
  b.dones = {false, true, false, false, false, false};
  b.bootstrap = {10.0, 4.0};
  const double g = 0.5;
  const auto r = compute_returns(b, g);
  EXPECT_DOUBLE_EQ(r[2], 3.0 + g * 10.0);
  EXPECT_DOUBLE_EQ(r[1], 2.0);
  EXPECT_DOUBLE_EQ(r[0], 1.0 + g * 2.0);
  EXPECT_DOUBLE_EQ(r[5], 1.0 + g * 4.0);
  EXPECT_DOUBLE_EQ(r[4], 0.0 + g * r[5]);
  EXPECT_DOUBLE_EQ(r[3], 0.5 + g * r[4]);
}

TEST(Returns, GammaOneSumsRewards) {
  RolloutBuffer b(1, 4);
  b.rewards = {1, 2, 3, 4};
  b.bootstrap = {0.0};
  EXPECT_EQ(compute_returns(b, 1.0), (std::vector<double>{10, 9, 7, 4}));
}

TEST(HoldCredit, DiscountedAndUndiscounted) {
  EXPECT_DOUBLE_EQ(hold_credit(0.95, 12), 0.95 / 0.05);
  EXPECT_DOUBLE_EQ(hold_credit(1.0, 12), 12.0);
  EXPECT_DOUBLE_EQ(episode_return(2.5, 10, true, 30, true), 22.5);
  EXPECT_DOUBLE_EQ(episode_return(2.5, 10, true, 30, false), 2.5);
  EXPECT_DOUBLE_EQ(episode_return(2.5, 30, false, 30, true), 2.5);
}

TEST(StreamSeed, DistinctAndStable) {
  EXPECT_EQ(stream_seed(1, 0), stream_seed(1, 0));
  EXPECT_NE(stream_seed(1, 0), stream_seed(1, 1));
  EXPECT_NE(stream_seed(1, 0), stream_seed(2, 0));
}

// Repeated updates on a frozen buffer drive the value loss down.
TEST(Update, ReducesValueLossOnFrozenBuffer) {
  const Scene s;
  PhotoEnv env(s, EnvConfig{});
  Rng rng(5);
  PolicyParams p = make_policy(env, {16, 16}, 3);
  RolloutBuffer b(2, 5);
  const KeypointVector goal = fixture_goal(s);
  Observation o = env.reset(goal, rng);
  for (int e = 0; e < 2; ++e)
    for (int t = 0; t < 5; ++t) {
      const std::size_t i = b.at(e, t);
      b.observations[i] = o.flat();
      b.actions[i] = static_cast<int>((e + t) % 4);
      const StepResult r = env.step(b.actions[i]);
      b.rewards[i] = r.reward;
      b.dones[i] = r.done;
      o = r.done ? env.reset(goal, rng) : r.observation;
    }
  TrainConfig c;
  c.learning_rate = 1e-3;
  c.entropy_coef = 0.0;
  Optimizer opt(p.size(), c);
  double first = 0, last = 0;
  for (int k = 0; k < 200; ++k) {
    for (std::size_t i = 0; i < b.size(); ++i) b.values[i] = forward(p, b.observations[i]).value;
    const LossReport rep = a2c_update(p, opt, b, c);
    if (k == 0) first = rep.value_loss;
    last = rep.value_loss;
  }
  EXPECT_LT(last, 0.5 * first);
}

TEST(Update, SingleSmallStepReducesValueLoss) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    PolicyParams p = PolicyParams::initialized(NetShape{6, {8, 8}, 4}, seed);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> n(0.0, 1.0);
    RolloutBuffer b(2, 4);
    for (std::size_t i = 0; i < b.size(); ++i) {
      b.observations[i].resize(6);
      for (double& v : b.observations[i]) v = n(rng);
      b.actions[i] = static_cast<int>(i % 4);
      b.rewards[i] = n(rng);
      b.values[i] = forward(p, b.observations[i]).value;
    }
    TrainConfig c;
    c.learning_rate = 1e-4;
    c.rms_scaling = false;
    Optimizer opt(p.size(), c);
    const double before = a2c_update(p, opt, b, c).value_loss;
    for (std::size_t i = 0; i < b.size(); ++i) b.values[i] = forward(p, b.observations[i]).value;
    const double after = a2c_update(p, opt, b, c).value_loss;
    EXPECT_LT(after, before) << "seed " << seed;
  }
}

TEST(Update, NonFiniteLossThrows) {
  PolicyParams p = PolicyParams::initialized(NetShape{4, {3}, 4}, 1);
  RolloutBuffer b(1, 2);
  b.observations = {{0, 0, 0, 0}, {1, 1, 1, 1}};
  b.rewards = {NAN, 0.0};
  TrainConfig c;
  Optimizer opt(p.size(), c);
  EXPECT_THROW(a2c_update(p, opt, b, c), TrainingDivergence);
}

TEST(Update, ClipsToGlobalNorm) {
  // Without RMS scaling the step equals lr times the clipped gradient.
  PolicyParams p = PolicyParams::initialized(NetShape{2, {3}, 4}, 2);
  const PolicyParams before = p;
  RolloutBuffer b(1, 1);
  b.observations = {{1.0, -1.0}};
  b.rewards = {1000.0};
  b.dones = {true};
  TrainConfig c;
  c.rms_scaling = false;
  c.learning_rate = 1.0;
  Optimizer opt(p.size(), c);
  const LossReport rep = a2c_update(p, opt, b, c);
  ASSERT_GT(rep.grad_norm, c.grad_clip_norm);
  double sq = 0;
  for (std::size_t i = 0; i < p.size(); ++i) sq += std::pow(p.theta()[i] - before.theta()[i], 2);
  EXPECT_NEAR(std::sqrt(sq), c.grad_clip_norm, 1e-9);
}

TEST(Train, ZeroUpdatesReturnsInitialParams) {
  const Scene s;
  const TrainResult r = train(s, fixture_goal(s), EnvConfig{}, small_config(0));
  EXPECT_TRUE(r.curve.empty());
  PhotoEnv env(s, EnvConfig{});
  const PolicyParams init = make_policy(env, {16, 16}, stream_seed(1, 0));
  EXPECT_TRUE(std::equal(init.theta().begin(), init.theta().end(), r.params.theta().begin()));
}

TEST(Train, DeterministicForASeed) {
  const Scene s;
  const TrainResult a = train(s, fixture_goal(s), EnvConfig{}, small_config(60));
  const TrainResult b = train(s, fixture_goal(s), EnvConfig{}, small_config(60));
  EXPECT_TRUE(std::equal(a.params.theta().begin(), a.params.theta().end(), b.params.theta().begin()));
  ASSERT_EQ(a.curve.size(), 6u);
  std::ostringstream ca, cb;
  write_curve_csv(ca, a.curve);
  write_curve_csv(cb, b.curve);
  EXPECT_EQ(ca.str(), cb.str());
  TrainConfig other = small_config(60);
  other.seed = 2;
  const TrainResult c = train(s, fixture_goal(s), EnvConfig{}, other);
  EXPECT_FALSE(std::equal(a.params.theta().begin(), a.params.theta().end(), c.params.theta().begin()));
}

TEST(Train, CurveCountsEpisodes) {
  const Scene s;
  const TrainResult r = train(s, fixture_goal(s), EnvConfig{}, small_config(100));
  for (std::size_t i = 1; i < r.curve.size(); ++i) EXPECT_GE(r.curve[i].episodes, r.curve[i - 1].episodes);
  EXPECT_GT(r.curve.back().episodes, 0);
  EXPECT_GE(r.curve.back().success_rate, 0.0);
  EXPECT_LE(r.curve.back().success_rate, 1.0);
}

TEST(Train, RejectsBadConfig) {
  const Scene s;
  TrainConfig c = small_config(1);
  c.gamma = 1.5;
  EXPECT_THROW(train(s, fixture_goal(s), EnvConfig{}, c), InvalidArgument);
  c = small_config(1);
  c.n_envs = 0;
  EXPECT_THROW(train(s, fixture_goal(s), EnvConfig{}, c), InvalidArgument);
}

TEST(Train, CurveCsvHeader) {
  std::ostringstream os;
  write_curve_csv(os, {{100, 1.5, 10.25, 0.5, 40}});
  EXPECT_EQ(os.str(), "update,mean_return,mean_len,success_rate\n100,1.500000,10.2500,0.5000\n");
}

TEST(Normalization, StandardisesKeypointsOnly) {
  const Scene s;
  EnvConfig ec;
  ec.memory_len = 2;
  PhotoEnv env(s, ec);
  const PolicyParams p = make_policy(env, {8}, 1);
  const auto& t = env.table();
  double mean = 0;
  for (int i = 0; i < s.num_states(); ++i) mean += (t.at(pose_from_index(s, i)).coords[0] - p.input_offset()[0]);
  EXPECT_NEAR(mean / s.num_states(), 0.0, 1e-9);
  for (int k = 28; k < p.shape().input; ++k) {
    EXPECT_EQ(p.input_offset()[k], 0.0);
    EXPECT_EQ(p.input_scale()[k], 1.0);
  }
}

TEST(Evaluate, RandomPolicyRunsAndCountsCapAsThirty) {
  const Scene s;
  PhotoEnv env(s, EnvConfig{});
  Rng rng(8);
  const EvalStats st = evaluate(env, fixture_goal(s), 50, random_controller(), rng);
  EXPECT_EQ(st.episodes, 50);
  EXPECT_LE(st.mean_actions, 30.0);
  EXPECT_GT(st.mean_actions, 0.0);
  EXPECT_THROW(evaluate(env, fixture_goal(s), 0, random_controller(), rng), InvalidArgument);
}
