#pragma once

// Grid-and-yaw view-adjustment environment with a gym-style reset/step API.
//
// State: RobotPose. Actions: rotate/translate by +-level. Reward:
// exp(-alpha * ||v - v_goal||_2) on the post-action keypoints. An episode ends
// when the keypoint distance drops to match_epsilon_px or after max_steps.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdint>
#include <memory>
#include <optional>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include "photobot/error.hpp"
#include "photobot/world.hpp"

namespace photobot {

using Rng = std::mt19937_64;

enum class ActionKind { Rotate, Translate };

struct ActionSpec {
  ActionKind kind = ActionKind::Rotate;
  int sign = 1;   // rotate: +1 clockwise; translate: +1 forward along heading
  int level = 1;  // step multiplier, >= 1

  friend bool operator==(const ActionSpec&, const ActionSpec&) = default;
};

inline std::string to_string(const ActionSpec& a) {
  std::string s = a.kind == ActionKind::Rotate ? "rotate" : "translate";
  s += a.sign > 0 ? '+' : '-';
  s += std::to_string(a.level);
  return s;
}

// Canonical order: rotate+, rotate-, translate+, translate-, each with
// ascending level. Index into this list is the one-hot position.
inline std::vector<ActionSpec> action_space(int velocity_levels) {
  if (velocity_levels < 1) throw InvalidArgument("velocity_levels must be >= 1");
  std::vector<ActionSpec> actions;
  actions.reserve(4 * velocity_levels);
  for (auto [kind, sign] : {std::pair{ActionKind::Rotate, 1}, std::pair{ActionKind::Rotate, -1},
                            std::pair{ActionKind::Translate, 1},
                            std::pair{ActionKind::Translate, -1}}) {
    for (int level = 1; level <= velocity_levels; ++level) actions.push_back({kind, sign, level});
  }
  return actions;
}

enum class StartMode { Fixed, Uniform };

struct EnvConfig {
  double alpha = 2.5e-3;
  double match_epsilon_px = 40.0;
  int max_steps = 30;
  int memory_len = 0;
  int velocity_levels = 1;
  StartMode start = StartMode::Uniform;
  RobotPose fixed_start{2, 0, 0};

  int num_actions() const { return 4 * velocity_levels; }
};

inline void validate(const EnvConfig& c) {
  if (!(c.alpha > 0.0)) throw InvalidArgument("alpha must be positive");
  if (!(c.match_epsilon_px > 0.0)) throw InvalidArgument("match_epsilon_px must be positive");
  if (c.max_steps < 1) throw InvalidArgument("max_steps must be >= 1");
  if (c.memory_len < 0) throw InvalidArgument("memory_len must be >= 0");
  if (c.velocity_levels < 1) throw InvalidArgument("velocity_levels must be >= 1");
}

namespace detail {
// sin/cos of a yaw that is a whole number of grid increments, snapped to a
// 1e-12 lattice so that exact cases (0.5, 1, 0) come out exact and the
// half-away-from-zero rounding below is well defined.
inline double snapped(double v) { return std::round(v * 1e12) / 1e12; }
}  // namespace detail

inline RobotPose transition(const RobotPose& pose, const ActionSpec& action, const Scene& scene) {
  RobotPose next = pose;
  const int delta = action.sign * action.level;
  if (action.kind == ActionKind::Rotate) {
    next.yaw_index = ((pose.yaw_index + delta) % scene.n_yaw + scene.n_yaw) % scene.n_yaw;
    return next;
  }
  const double theta = pose.yaw_index * scene.yaw_step_rad();
  const double x = pose.ix + delta * detail::snapped(std::sin(theta));
  const double y = pose.iy + delta * detail::snapped(std::cos(theta));
  next.ix = std::clamp(static_cast<int>(std::round(x)), 0, scene.grid_nx - 1);
  next.iy = std::clamp(static_cast<int>(std::round(y)), 0, scene.grid_ny - 1);
  return next;
}

inline double keypoint_distance(const KeypointVector& a, const KeypointVector& b) {
  if (a.coords.size() != b.coords.size())
    throw InvalidArgument("keypoint vectors differ in length");
  double sum = 0.0;
  for (std::size_t i = 0; i < a.coords.size(); ++i) {
    const double d = a.coords[i] - b.coords[i];
    sum += d * d;
  }
  return std::sqrt(sum);
}

inline double reward(const KeypointVector& v, const KeypointVector& v_goal, double alpha) {
  if (!(alpha > 0.0)) throw InvalidArgument("alpha must be positive");
  return std::exp(-alpha * keypoint_distance(v, v_goal));
}

// Flat state index: ((ix * grid_ny) + iy) * n_yaw + yaw_index.
inline int state_index(const Scene& s, const RobotPose& p) {
  return (p.ix * s.grid_ny + p.iy) * s.n_yaw + p.yaw_index;
}

inline RobotPose pose_from_index(const Scene& s, int index) {
  if (index < 0 || index >= s.num_states()) throw InvalidArgument("state index out of range");
  const int yaw = index % s.n_yaw;
  const int cell = index / s.n_yaw;
  return {cell / s.grid_ny, cell % s.grid_ny, yaw};
}

// Keypoints for every state of an immutable scene, shared between envs.
class KeypointTable {
 public:
  explicit KeypointTable(const Scene& scene) : scene_(scene) {
    validate(scene_);
    table_.reserve(scene_.num_states());
    for (int i = 0; i < scene_.num_states(); ++i)
      table_.push_back(project_keypoints(scene_, pose_from_index(scene_, i)));
  }

  const Scene& scene() const { return scene_; }
  const KeypointVector& at(const RobotPose& p) const { return table_[state_index(scene_, p)]; }

 private:
  Scene scene_;
  std::vector<KeypointVector> table_;
};

enum class Termination { None, Match, StepCap };

inline const char* to_string(Termination t) {
  switch (t) {
    case Termination::Match: return "match";
    case Termination::StepCap: return "step-cap";
    default: return "none";
  }
}

struct Observation {
  std::vector<double> keypoints;  // 2K
  std::vector<double> memory;     // memory_len * num_actions one-hot, most recent last

  std::vector<double> flat() const {
    std::vector<double> out = keypoints;
    out.insert(out.end(), memory.begin(), memory.end());
    return out;
  }
  std::size_t size() const { return keypoints.size() + memory.size(); }
};

struct StepInfo {
  double distance_px = 0.0;
  RobotPose pose;
  int steps = 0;
  Termination terminated_by = Termination::None;
};

struct StepResult {
  Observation observation;
  double reward = 0.0;
  bool done = false;
  StepInfo info;
};

class PhotoEnv {
 public:
  PhotoEnv(std::shared_ptr<const KeypointTable> table, EnvConfig config)
      : table_(std::move(table)), config_(config), actions_(action_space(config.velocity_levels)) {
    validate(config_);
    if (!table_) throw InvalidArgument("PhotoEnv needs a keypoint table");
  }
  PhotoEnv(const Scene& scene, EnvConfig config)
      : PhotoEnv(std::make_shared<const KeypointTable>(scene), config) {}

  const Scene& scene() const { return table_->scene(); }
  const KeypointTable& table() const { return *table_; }
  std::shared_ptr<const KeypointTable> shared_table() const { return table_; }
  const EnvConfig& config() const { return config_; }
  const std::vector<ActionSpec>& actions() const { return actions_; }
  int num_actions() const { return static_cast<int>(actions_.size()); }
  std::size_t observation_size() const {
    return 2 * kNumKeypoints + static_cast<std::size_t>(config_.memory_len) * actions_.size();
  }

  const RobotPose& pose() const { return pose_; }
  int steps() const { return steps_; }
  bool is_reset() const { return reset_; }
  bool done() const { return done_; }
  double distance_px() const { return distance_; }
  const KeypointVector& goal() const { return goal_; }
  const KeypointVector& current_keypoints() const { return table_->at(pose_); }
  bool matches(const RobotPose& p) const {
    return keypoint_distance(table_->at(p), goal_) <= config_.match_epsilon_px;
  }

  // Start from an explicit pose. If the pose already matches the template the
  // episode is terminal right away (done() is true, zero actions needed).
  Observation reset(const KeypointVector& goal, const RobotPose& start) {
    if (goal.coords.size() != 2 * kNumKeypoints)
      throw InvalidArgument("template must have 2K = 28 coordinates");
    if (!in_range(scene(), start)) throw InvalidArgument("start pose outside the scene grid");
    goal_ = goal;
    pose_ = start;
    steps_ = 0;
    history_.clear();
    reset_ = true;
    distance_ = keypoint_distance(table_->at(pose_), goal_);
    done_ = distance_ <= config_.match_epsilon_px;
    return observe();
  }

  // Start per config.start. Uniform sampling skips states that already match,
  // so every sampled episode needs at least one action.
  Observation reset(const KeypointVector& goal, Rng& rng) {
    if (config_.start == StartMode::Fixed) return reset(goal, config_.fixed_start);
    if (goal.coords.size() != 2 * kNumKeypoints)
      throw InvalidArgument("template must have 2K = 28 coordinates");
    std::uniform_int_distribution<int> pick(0, scene().num_states() - 1);
    for (int attempt = 0; attempt < 100000; ++attempt) {
      const RobotPose p = pose_from_index(scene(), pick(rng));
      if (keypoint_distance(table_->at(p), goal) > config_.match_epsilon_px) return reset(goal, p);
    }
    throw InvalidArgument("every state matches the template; nothing to sample");
  }

  StepResult step(int action_index) {
    if (action_index < 0 || action_index >= num_actions())
      throw InvalidArgument("action index out of range");
    if (!reset_) throw ProtocolViolation("step() before reset()");
    if (done_) throw ProtocolViolation("step() on a finished episode");

    pose_ = transition(pose_, actions_[action_index], scene());
    ++steps_;
    history_.push_back(action_index);
    if (static_cast<int>(history_.size()) > config_.memory_len) history_.erase(history_.begin());

    distance_ = keypoint_distance(table_->at(pose_), goal_);
    StepResult r;
    r.reward = std::exp(-config_.alpha * distance_);
    r.info.distance_px = distance_;
    r.info.pose = pose_;
    r.info.steps = steps_;
    if (distance_ <= config_.match_epsilon_px)
      r.info.terminated_by = Termination::Match;
    else if (steps_ >= config_.max_steps)
      r.info.terminated_by = Termination::StepCap;
    done_ = r.info.terminated_by != Termination::None;
    r.done = done_;
    r.observation = observe();
    return r;
  }

  StepResult step(const ActionSpec& action) {
    for (int i = 0; i < num_actions(); ++i)
      if (actions_[i] == action) return step(i);
    throw InvalidArgument("action not in this environment's action space");
  }

  Observation observe() const {
    Observation o;
    o.keypoints = table_->at(pose_).coords;
    const std::size_t a = actions_.size();
    o.memory.assign(static_cast<std::size_t>(config_.memory_len) * a, 0.0);
    // Zero padding first, most recent action in the last slot.
    const std::size_t offset = config_.memory_len - history_.size();
    for (std::size_t i = 0; i < history_.size(); ++i)
      o.memory[(offset + i) * a + static_cast<std::size_t>(history_[i])] = 1.0;
    return o;
  }

 private:
  std::shared_ptr<const KeypointTable> table_;
  EnvConfig config_;
  std::vector<ActionSpec> actions_;

  KeypointVector goal_;
  RobotPose pose_;
  std::vector<int> history_;
  int steps_ = 0;
  double distance_ = 0.0;
  bool reset_ = false;
  bool done_ = false;
};

// ---- episode traces --------------------------------------------------------

struct TraceRow {
  int step = 0;
  RobotPose pose;
  std::string action;  // empty for the initial row
  double reward = 0.0;
  double distance_px = 0.0;
  bool done = false;
};

inline void write_trace_csv(std::ostream& os, const std::vector<TraceRow>& rows) {
  os << "step,ix,iy,yaw_index,action,reward,distance_px,done\n";
  char buf[160];
  for (const TraceRow& r : rows) {
    std::snprintf(buf, sizeof buf, "%d,%d,%d,%d,%s,%.10f,%.6f,%d\n", r.step, r.pose.ix, r.pose.iy,
                  r.pose.yaw_index, r.action.c_str(), r.reward, r.distance_px, r.done ? 1 : 0);
    os << buf;
  }
}

}  // namespace photobot
