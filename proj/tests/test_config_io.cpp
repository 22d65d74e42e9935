#include <gtest/gtest.h>

#include <sstream>

#include "photobot/a2c.hpp"
#include "photobot/io.hpp"

using namespace photobot;

namespace {

std::string dump(const RunConfig& c) {
  std::ostringstream os;
  write_config(os, c);
  return os.str();
}

RunConfig parse(const std::string& text) {
  std::istringstream is(text);
  return parse_config(is);
}

}  // namespace

TEST(Config, EmptyFileGivesDefaults) {
  EXPECT_EQ(dump(parse("")), dump(RunConfig{}));
}

TEST(Config, RoundTripIsExact) {
  RunConfig c;
  c.scene.spacing_m = 0.1 + 0.2;
  c.env.alpha = 1.0 / 3.0;
  c.env.memory_len = 5;
  c.env.start = StartMode::Fixed;
  c.env.fixed_start = {4, 1, 17};
  c.train.hidden = {32, 16, 8};
  c.train.gamma = 0.987654321;
  c.tracker.dt_s = 1e-3 / 7.0;
  c.scene.person.pose = PoseParams::arms_up();
  c.seed = 18446744073709551615ull;
  c.fov_levels_deg = {90.5, 12.25};
  const RunConfig back = parse(dump(c));
  EXPECT_EQ(dump(back), dump(c));
  EXPECT_EQ(back.scene.spacing_m, c.scene.spacing_m);
  EXPECT_EQ(back.env.alpha, c.env.alpha);
  EXPECT_EQ(back.train.gamma, c.train.gamma);
  EXPECT_EQ(back.tracker.dt_s, c.tracker.dt_s);
  EXPECT_EQ(back.env.fixed_start, c.env.fixed_start);
  EXPECT_EQ(back.train.hidden, c.train.hidden);
  EXPECT_EQ(back.seed, c.seed);
  EXPECT_EQ(back.train.seed, c.seed);
  EXPECT_EQ(back.scene.person.pose, PoseParams::arms_up());
}

TEST(Config, CommentsAndWhitespace) {
  const RunConfig c = parse("# top\n[env]\n  max_steps = 12   ; trailing\n\n[run]\nepisodes=7\n");
  EXPECT_EQ(c.env.max_steps, 12);
  EXPECT_EQ(c.episodes, 7);
}

TEST(Config, Errors) {
  EXPECT_THROW(parse("[env]\nmax_stepz = 3\n"), FormatError);
  EXPECT_THROW(parse("[bogus]\n"), FormatError);
  EXPECT_THROW(parse("max_steps = 3\n"), FormatError);
  EXPECT_THROW(parse("[env]\nmax_steps\n"), FormatError);
  EXPECT_THROW(parse("[env]\nmax_steps = three\n"), FormatError);
  EXPECT_THROW(parse("[env]\nstart = sideways\n"), FormatError);
  EXPECT_THROW(parse("[train]\nlr_decay = maybe\n"), FormatError);
  EXPECT_THROW(load_config("/nonexistent/photobot.ini"), FormatError);
}

TEST(Config, ValidateCatchesRangeErrors) {
  RunConfig c;
  c.template_pose = {5, 0, 0};
  EXPECT_THROW(validate(c), InvalidArgument);
  c = RunConfig{};
  c.trigger_threshold = 0.0;
  EXPECT_THROW(validate(c), InvalidArgument);
  EXPECT_NO_THROW(validate(RunConfig{}));
}

TEST(Params, RoundTripIsExact) {
  const Scene s;
  PhotoEnv env(s, EnvConfig{});
  SavedPolicy sp;
  sp.params = make_policy(env, {8, 4}, 99);
  sp.goal = project_keypoints(s, {1, 3, 0});
  sp.config.env.memory_len = 2;
  sp.seed = 42;
  std::stringstream ss;
  write_params(ss, sp);
  const SavedPolicy back = read_params(ss);
  EXPECT_EQ(back.seed, 42u);
  EXPECT_EQ(back.params.shape().hidden, (std::vector<int>{8, 4}));
  EXPECT_TRUE(std::equal(sp.params.theta().begin(), sp.params.theta().end(), back.params.theta().begin()));
  EXPECT_TRUE(std::equal(sp.params.input_scale().begin(), sp.params.input_scale().end(),
                         back.params.input_scale().begin()));
  EXPECT_EQ(back.goal.coords, sp.goal.coords);
  EXPECT_EQ(back.config.env.memory_len, 2);
  const std::vector<double> x(back.params.shape().input, 0.3);
  EXPECT_EQ(forward(back.params, x).value, forward(sp.params, x).value);
}

TEST(Params, CorruptFilesRejected) {
  const Scene s;
  PhotoEnv env(s, EnvConfig{});
  SavedPolicy sp;
  sp.params = make_policy(env, {4}, 1);
  sp.goal = project_keypoints(s, {1, 3, 0});
  std::ostringstream os;
  write_params(os, sp);
  const std::string good = os.str();

  auto fails = [](const std::string& text) {
    std::istringstream is(text);
    EXPECT_THROW(read_params(is), FormatError) << text.substr(0, 60);
  };
  fails("");
  fails("photobot-params 2\n");
  fails(good.substr(0, good.size() / 2));
  std::string nan = good;
  nan.replace(nan.find("theta"), std::string::npos, "theta 3\nnan\n");
  fails(nan);
  std::string no_end = good.substr(0, good.find("config-end"));
  fails(no_end);
  EXPECT_THROW(load_params("/nonexistent/params.txt"), FormatError);
}

TEST(Template, RoundTrip) {
  const Scene s;
  const KeypointVector k = project_keypoints(s, {2, 1, 1});
  std::stringstream ss;
  write_template(ss, k, 640, 480);
  const TemplateFile t = read_template(ss);
  EXPECT_EQ(t.keypoints.coords, k.coords);
  EXPECT_EQ(t.width_px, 640);
  EXPECT_EQ(t.height_px, 480);
}

TEST(Template, Errors) {
  auto fails = [](const std::string& text) {
    std::istringstream is(text);
    EXPECT_THROW(read_template(is), FormatError) << text;
  };
  fails("");
  fails("13 640 480\n");
  fails("14 640 480\nneck 1 1\n");
  fails("14 640 480\nhead 700 1\n");
  fails("14 640 480\nhead 1 1\n");  // truncated
}
