#pragma once

// Brute-force ground truth over the discrete pose space: exhaustive best-view
// search, BFS shortest action sequences and a one-step greedy baseline.

#include <algorithm>
#include <cstdio>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <set>
#include <vector>

#include "photobot/a2c.hpp"
#include "photobot/photo_env.hpp"

namespace photobot {

struct OracleResult {
  RobotPose best_pose;
  double best_reward = 0.0;
  std::vector<double> rewards;  // indexed by state_index
};

inline OracleResult best_state(const KeypointTable& table, const KeypointVector& goal, double alpha) {
  const Scene& s = table.scene();
  OracleResult r;
  r.rewards.resize(s.num_states());
  int best = 0;
  for (int i = 0; i < s.num_states(); ++i) {
    r.rewards[i] = reward(table.at(pose_from_index(s, i)), goal, alpha);
    if (r.rewards[i] > r.rewards[best]) best = i;  // strict: lowest index wins ties
  }
  r.best_pose = pose_from_index(s, best);
  r.best_reward = r.rewards[best];
  return r;
}

inline OracleResult best_state(const Scene& scene, const KeypointVector& goal, double alpha) {
  return best_state(KeypointTable(scene), goal, alpha);
}

using GoalPredicate = std::function<bool(const RobotPose&)>;

inline GoalPredicate match_region(std::shared_ptr<const KeypointTable> table, KeypointVector goal,
                                  double epsilon_px) {
  return [table = std::move(table), goal = std::move(goal), epsilon_px](const RobotPose& p) {
    return keypoint_distance(table->at(p), goal) <= epsilon_px;
  };
}

// States whose reward is within tol of the exhaustive optimum.
inline GoalPredicate best_region(std::shared_ptr<const KeypointTable> table, KeypointVector goal,
                                 double alpha, double tol = 1e-9) {
  const double best = best_state(*table, goal, alpha).best_reward;
  return [table = std::move(table), goal = std::move(goal), alpha, best, tol](const RobotPose& p) {
    return reward(table->at(p), goal, alpha) >= best - tol;
  };
}

// BFS layer index of every state from `from` (-1 if unreachable).
inline std::vector<int> bfs_depths(const Scene& scene, const RobotPose& from, int velocity_levels) {
  const auto actions = action_space(velocity_levels);
  std::vector<int> depth(scene.num_states(), -1);
  std::deque<RobotPose> open{from};
  depth[state_index(scene, from)] = 0;
  while (!open.empty()) {
    const RobotPose cur = open.front();
    open.pop_front();
    const int d = depth[state_index(scene, cur)];
    for (const ActionSpec& a : actions) {
      const RobotPose nxt = transition(cur, a, scene);
      int& slot = depth[state_index(scene, nxt)];
      if (slot < 0) {
        slot = d + 1;
        open.push_back(nxt);
      }
    }
  }
  return depth;
}

// Minimum-length action sequence from `from` into the goal set. Actions are
// expanded in canonical order and the first discovery of a state fixes its
// parent, which makes the returned path deterministic.
inline std::vector<ActionSpec> shortest_path(const Scene& scene, const RobotPose& from,
                                             const GoalPredicate& goal, int velocity_levels) {
  if (!in_range(scene, from)) throw InvalidArgument("shortest_path: start outside the grid");
  if (goal(from)) return {};
  const auto actions = action_space(velocity_levels);
  const int n = scene.num_states();
  std::vector<int> parent(n, -1), via(n, -1);
  std::vector<bool> seen(n, false);
  std::deque<int> open{state_index(scene, from)};
  seen[open.front()] = true;
  while (!open.empty()) {
    const int cur = open.front();
    open.pop_front();
    const RobotPose cp = pose_from_index(scene, cur);
    for (int k = 0; k < static_cast<int>(actions.size()); ++k) {
      const RobotPose np = transition(cp, actions[k], scene);
      const int ni = state_index(scene, np);
      if (seen[ni]) continue;
      seen[ni] = true;
      parent[ni] = cur;
      via[ni] = k;
      if (goal(np)) {
        std::vector<ActionSpec> path;
        for (int s = ni; parent[s] >= 0; s = parent[s]) path.push_back(actions[via[s]]);
        std::reverse(path.begin(), path.end());
        return path;
      }
      open.push_back(ni);
    }
  }
  throw NoPath("no action sequence reaches the goal set");
}

// Replans with BFS at every step and executes the first action.
inline Controller oracle_controller(GoalPredicate goal) {
  return [goal = std::move(goal)](const PhotoEnv& env, const Observation&, Rng&) {
    const auto path = shortest_path(env.scene(), env.pose(), goal, env.config().velocity_levels);
    if (path.empty()) throw NoPath("oracle controller asked to act at a goal state");
    const auto& acts = env.actions();
    return static_cast<int>(std::find(acts.begin(), acts.end(), path.front()) - acts.begin());
  };
}

enum class GreedyStop { Match, StepCap, Cycle };

inline const char* to_string(GreedyStop s) {
  switch (s) {
    case GreedyStop::Match: return "match";
    case GreedyStop::StepCap: return "step-cap";
    default: return "cycle";
  }
}

struct GreedyTrace {
  std::vector<TraceRow> trace;
  std::vector<ActionSpec> actions;
  GreedyStop stop = GreedyStop::Match;
};

// One-step lookahead: take the action whose successor has the highest reward
// (ties in canonical order). Stops on a match, at the step cap, or when the
// chosen successor was already visited.
inline GreedyTrace greedy_baseline(const KeypointTable& table, const KeypointVector& goal,
                                   const RobotPose& start, const EnvConfig& cfg) {
  const Scene& s = table.scene();
  const auto acts = action_space(cfg.velocity_levels);
  GreedyTrace g;
  RobotPose cur = start;
  double dist = keypoint_distance(table.at(cur), goal);
  g.trace.push_back({0, cur, "", std::exp(-cfg.alpha * dist), dist, dist <= cfg.match_epsilon_px});
  std::set<int> visited{state_index(s, cur)};
  while (true) {
    if (dist <= cfg.match_epsilon_px) {
      g.stop = GreedyStop::Match;
      break;
    }
    if (static_cast<int>(g.actions.size()) >= cfg.max_steps) {
      g.stop = GreedyStop::StepCap;
      break;
    }
    int best = 0;
    double best_r = -1.0;
    for (int k = 0; k < static_cast<int>(acts.size()); ++k) {
      const double r = reward(table.at(transition(cur, acts[k], s)), goal, cfg.alpha);
      if (r > best_r) {
        best_r = r;
        best = k;
      }
    }
    const RobotPose nxt = transition(cur, acts[best], s);
    if (!visited.insert(state_index(s, nxt)).second) {
      g.stop = GreedyStop::Cycle;
      break;
    }
    cur = nxt;
    dist = keypoint_distance(table.at(cur), goal);
    g.actions.push_back(acts[best]);
    const bool done = dist <= cfg.match_epsilon_px ||
                      static_cast<int>(g.actions.size()) >= cfg.max_steps;
    g.trace.push_back({static_cast<int>(g.actions.size()), cur, to_string(acts[best]), best_r, dist, done});
  }
  return g;
}

inline Controller greedy_controller(KeypointVector goal) {
  return [goal = std::move(goal)](const PhotoEnv& env, const Observation&, Rng&) {
    int best = 0;
    double best_r = -1.0;
    for (int k = 0; k < env.num_actions(); ++k) {
      const RobotPose nxt = transition(env.pose(), env.actions()[k], env.scene());
      const double r = reward(env.table().at(nxt), goal, env.config().alpha);
      if (r > best_r) {
        best_r = r;
        best = k;
      }
    }
    return best;
  };
}

// BFS path length into the goal set from every start; -1 when unreachable.
inline std::vector<int> path_lengths(const Scene& scene, const GoalPredicate& goal,
                                     int velocity_levels) {
  std::vector<int> out(scene.num_states(), -1);
  for (int i = 0; i < scene.num_states(); ++i) {
    try {
      out[i] = static_cast<int>(shortest_path(scene, pose_from_index(scene, i), goal, velocity_levels).size());
    } catch (const NoPath&) {
    }
  }
  return out;
}

inline void write_reward_table_csv(std::ostream& os, const Scene& scene, const OracleResult& r) {
  os << "ix,iy,yaw_index,reward\n";
  char buf[96];
  for (int i = 0; i < scene.num_states(); ++i) {
    const RobotPose p = pose_from_index(scene, i);
    std::snprintf(buf, sizeof buf, "%d,%d,%d,%.12f\n", p.ix, p.iy, p.yaw_index, r.rewards[i]);
    os << buf;
  }
}

// Histogram as length -> count; unreachable states are reported under -1.
inline std::map<int, int> histogram(const std::vector<int>& lengths) {
  std::map<int, int> h;
  for (int l : lengths) ++h[l];
  return h;
}

}  // namespace photobot
