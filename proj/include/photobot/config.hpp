#pragma once

// Run configuration: the union of every module's settings, read from and
// written back to a plain "key = value" file with [section] headers.
//
//   [scene] [env] [train] [tracker] [scorer] [run]
//
// Unknown sections or keys are errors, so typos never pass silently. Reals
// are written with 17 significant digits and read back bit-exact.

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <functional>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "photobot/a2c.hpp"
#include "photobot/composer.hpp"
#include "photobot/error.hpp"
#include "photobot/photo_env.hpp"
#include "photobot/tracker.hpp"
#include "photobot/world.hpp"

namespace photobot {

struct RunConfig {
  Scene scene;
  EnvConfig env;
  TrainConfig train;
  TrackerConfig tracker;
  ScorerSpec scorer;
  std::uint64_t seed = 1;
  std::string out_dir = "out";
  RobotPose template_pose{1, 3, 0};  // fixture template: the view from this state
  int episodes = 600;                // eval episodes
  int panorama_ix = 2;               // compose: cell where the panorama is taken
  int panorama_iy = 0;
  std::vector<double> fov_levels_deg{78.0, 60.0, 45.0};
  double trigger_threshold = 0.9;
};

namespace detail {

inline std::string fmt_real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string join_reals(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + fmt_real(v[i]);
  return s;
}

inline std::string join_ints(const std::vector<int>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
  return s;
}

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) out.push_back(trim(item));
  return out;
}

struct Field {
  std::function<void(const std::string&)> set;
  std::function<std::string()> get;
};

inline double to_real(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  double d = 0.0;
  try {
    d = std::stod(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (v.empty() || used != v.size()) throw FormatError("config: '" + key + "' expects a number, got '" + v + "'");
  return d;
}

inline long long to_int(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  long long i = 0;
  try {
    i = std::stoll(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (v.empty() || used != v.size()) throw FormatError("config: '" + key + "' expects an integer, got '" + v + "'");
  return i;
}

inline bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw FormatError("config: '" + key + "' expects true or false, got '" + v + "'");
}

// section.key -> accessor, in the order they are written.
inline std::vector<std::pair<std::string, Field>> fields(RunConfig& c) {
  std::vector<std::pair<std::string, Field>> f;
  auto real = [&f](std::string k, double& r) {
    f.push_back({k, {[&r, k](const std::string& v) { r = to_real(k, v); }, [&r] { return fmt_real(r); }}});
  };
  auto integer = [&f](std::string k, int& r) {
    f.push_back({k, {[&r, k](const std::string& v) { r = static_cast<int>(to_int(k, v)); },
                     [&r] { return std::to_string(r); }}});
  };
  auto boolean = [&f](std::string k, bool& r) {
    f.push_back({k, {[&r, k](const std::string& v) { r = to_bool(k, v); }, [&r] { return std::string(r ? "true" : "false"); }}});
  };
  auto degrees = [&f](std::string k, double& rad) {
    f.push_back({k, {[&rad, k](const std::string& v) { rad = deg2rad(to_real(k, v)); },
                     [&rad] { return fmt_real(rad2deg(rad)); }}});
  };
  auto pose3 = [&f](std::string k, RobotPose& p) {
    f.push_back({k, {[&p, k](const std::string& v) {
                       const auto parts = split(v, ',');
                       if (parts.size() != 3) throw FormatError("config: '" + k + "' expects ix,iy,yaw_index");
                       p = {static_cast<int>(to_int(k, parts[0])), static_cast<int>(to_int(k, parts[1])),
                            static_cast<int>(to_int(k, parts[2]))};
                     },
                     [&p] { return std::to_string(p.ix) + "," + std::to_string(p.iy) + "," + std::to_string(p.yaw_index); }}});
  };

  Scene& s = c.scene;
  integer("scene.grid_nx", s.grid_nx);
  integer("scene.grid_ny", s.grid_ny);
  real("scene.spacing_m", s.spacing_m);
  integer("scene.n_yaw", s.n_yaw);
  degrees("scene.camera_hfov_deg", s.camera.hfov_rad);
  integer("scene.camera_width_px", s.camera.width_px);
  integer("scene.camera_height_px", s.camera.height_px);
  real("scene.camera_height_m", s.camera_height_m);
  real("scene.person_x_m", s.person.x_m);
  real("scene.person_y_m", s.person.y_m);
  degrees("scene.person_facing_deg", s.person.facing_rad);
  real("scene.person_height_m", s.person.height_m);
  f.push_back({"scene.person_pose",
               {[&s](const std::string& v) {
                  if (v == "arms_down") s.person.pose = PoseParams::arms_down();
                  else if (v == "arms_up") s.person.pose = PoseParams::arms_up();
                  else throw FormatError("config: scene.person_pose must be arms_down or arms_up");
                },
                [&s] { return std::string(s.person.pose == PoseParams::arms_up() ? "arms_up" : "arms_down"); }}});

  EnvConfig& e = c.env;
  real("env.alpha", e.alpha);
  real("env.match_epsilon_px", e.match_epsilon_px);
  integer("env.max_steps", e.max_steps);
  integer("env.memory_len", e.memory_len);
  integer("env.velocity_levels", e.velocity_levels);
  f.push_back({"env.start",
               {[&e](const std::string& v) {
                  if (v == "uniform") e.start = StartMode::Uniform;
                  else if (v == "fixed") e.start = StartMode::Fixed;
                  else throw FormatError("config: env.start must be uniform or fixed");
                },
                [&e] { return std::string(e.start == StartMode::Uniform ? "uniform" : "fixed"); }}});
  pose3("env.fixed_start", e.fixed_start);

  TrainConfig& t = c.train;
  real("train.gamma", t.gamma);
  real("train.learning_rate", t.learning_rate);
  boolean("train.lr_decay", t.lr_decay);
  integer("train.n_steps", t.n_steps);
  integer("train.n_envs", t.n_envs);
  real("train.entropy_coef", t.entropy_coef);
  real("train.value_coef", t.value_coef);
  real("train.grad_clip_norm", t.grad_clip_norm);
  integer("train.total_updates", t.total_updates);
  f.push_back({"train.hidden",
               {[&t](const std::string& v) {
                  t.hidden.clear();
                  for (const auto& p : split(v, ',')) t.hidden.push_back(static_cast<int>(to_int("train.hidden", p)));
                },
                [&t] { return join_ints(t.hidden); }}});
  boolean("train.rms_scaling", t.rms_scaling);
  real("train.rms_decay", t.rms_decay);
  real("train.rms_eps", t.rms_eps);
  boolean("train.hold_matched_view", t.hold_matched_view);
  real("train.reward_scale", t.reward_scale);
  integer("train.log_interval", t.log_interval);
  integer("train.stats_window", t.stats_window);

  TrackerConfig& k = c.tracker;
  real("tracker.drop_threshold", k.drop_threshold);
  real("tracker.update_threshold", k.update_threshold);
  real("tracker.operating_zone_m", k.operating_zone_m);
  real("tracker.obstacle_stop_m", k.obstacle_stop_m);
  real("tracker.v_max_mps", k.v_max_mps);
  real("tracker.w_max_rps", k.w_max_rps);
  real("tracker.linear_gain", k.linear_gain);
  real("tracker.angular_gain", k.angular_gain);
  real("tracker.a_max_mps2", k.a_max_mps2);
  real("tracker.dt_s", k.dt_s);

  ScorerSpec& sc = c.scorer;
  f.push_back({"scorer.name", {[&sc](const std::string& v) { sc.name = v; }, [&sc] { return sc.name; }}});
  real("scorer.w_thirds", sc.w_thirds);
  real("scorer.w_size", sc.w_size);
  real("scorer.w_headroom", sc.w_headroom);
  real("scorer.target_height_ratio", sc.target_height_ratio);
  real("scorer.target_headroom", sc.target_headroom);
  real("scorer.headroom_tolerance", sc.headroom_tolerance);

  f.push_back({"run.seed", {[&c](const std::string& v) {
                              std::size_t used = 0;
                              unsigned long long s = 0;
                              try {
                                if (!v.empty() && v[0] != '-') s = std::stoull(v, &used);
                              } catch (const std::exception&) {
                                used = 0;
                              }
                              if (v.empty() || used != v.size())
                                throw FormatError("config: run.seed expects an unsigned integer, got '" + v + "'");
                              c.seed = s;
                            },
                            [&c] { return std::to_string(c.seed); }}});
  f.push_back({"run.out", {[&c](const std::string& v) { c.out_dir = v; }, [&c] { return c.out_dir; }}});
  pose3("run.template_pose", c.template_pose);
  integer("run.episodes", c.episodes);
  integer("run.panorama_ix", c.panorama_ix);
  integer("run.panorama_iy", c.panorama_iy);
  f.push_back({"run.fov_levels_deg",
               {[&c](const std::string& v) {
                  c.fov_levels_deg.clear();
                  for (const auto& p : split(v, ',')) c.fov_levels_deg.push_back(to_real("run.fov_levels_deg", p));
                },
                [&c] { return join_reals(c.fov_levels_deg); }}});
  real("run.trigger_threshold", c.trigger_threshold);
  return f;
}

}  // namespace detail

inline void validate(const RunConfig& c) {
  validate(c.scene);
  validate(c.env);
  validate(c.train);
  validate(c.tracker);
  if (!in_range(c.scene, c.template_pose)) throw InvalidArgument("run.template_pose outside the grid");
  if (!in_range(c.scene, c.env.fixed_start)) throw InvalidArgument("env.fixed_start outside the grid");
  if (!in_range(c.scene, RobotPose{c.panorama_ix, c.panorama_iy, 0})) throw InvalidArgument("panorama cell outside the grid");
  if (c.fov_levels_deg.empty()) throw InvalidArgument("run.fov_levels_deg must not be empty");
  for (double f : c.fov_levels_deg)
    if (!(f > 0.0 && f < 180.0)) throw InvalidArgument("run.fov_levels_deg entries must lie in (0, 180)");
  if (!(c.trigger_threshold > 0.0 && c.trigger_threshold <= 1.0)) throw InvalidArgument("run.trigger_threshold must lie in (0, 1]");
}

// Applies "key = value" lines on top of `base`.
inline RunConfig parse_config(std::istream& is, RunConfig base = {}) {
  auto fs = detail::fields(base);
  std::map<std::string, detail::Field*> index;
  for (auto& [k, f] : fs) index[k] = &f;
  std::string line, section;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find_first_of("#;");
    const std::string t = detail::trim(hash == std::string::npos ? line : line.substr(0, hash));
    if (t.empty()) continue;
    if (t.front() == '[') {
      if (t.back() != ']') throw FormatError("config line " + std::to_string(lineno) + ": malformed section header");
      section = detail::trim(t.substr(1, t.size() - 2));
      static const char* known[] = {"scene", "env", "train", "tracker", "scorer", "run"};
      if (std::find(std::begin(known), std::end(known), section) == std::end(known))
        throw FormatError("config line " + std::to_string(lineno) + ": unknown section [" + section + "]");
      continue;
    }
    const auto eq = t.find('=');
    if (eq == std::string::npos) throw FormatError("config line " + std::to_string(lineno) + ": expected key = value");
    if (section.empty()) throw FormatError("config line " + std::to_string(lineno) + ": key outside any section");
    const std::string key = section + "." + detail::trim(t.substr(0, eq));
    const auto it = index.find(key);
    if (it == index.end()) throw FormatError("config line " + std::to_string(lineno) + ": unknown key '" + key + "'");
    it->second->set(detail::trim(t.substr(eq + 1)));
  }
  RunConfig out = base;
  out.train.seed = out.seed;
  return out;
}

inline RunConfig load_config(const std::string& path, RunConfig base = {}) {
  std::ifstream is(path);
  if (!is) throw FormatError("cannot open config file '" + path + "'");
  return parse_config(is, std::move(base));
}

inline void write_config(std::ostream& os, const RunConfig& cfg) {
  RunConfig c = cfg;
  auto fs = detail::fields(c);
  std::string section;
  for (auto& [k, f] : fs) {
    const auto dot = k.find('.');
    const std::string sec = k.substr(0, dot);
    if (sec != section) {
      if (!section.empty()) os << '\n';
      os << '[' << sec << "]\n";
      section = sec;
    }
    os << k.substr(dot + 1) << " = " << f.get() << '\n';
  }
}

}  // namespace photobot
