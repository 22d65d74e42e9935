#pragma once

// Decision logic of the person-following subsystem, driven by scripted
// detection frames: target selection, reference refresh, operating-zone and
// obstacle gating, proportional commands and an acceleration-limited smoother.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "photobot/error.hpp"

namespace photobot {

struct BBox {
  double x = 0.0, y = 0.0, w = 1.0, h = 1.0;
};

struct Detection {
  BBox bbox;
  double similarity = 0.0;
};

inline void validate(const Detection& d) {
  if (!(d.bbox.w > 0.0 && d.bbox.h > 0.0)) throw InvalidArgument("detection box must have positive size");
  if (!(d.similarity >= 0.0 && d.similarity <= 1.0)) throw InvalidArgument("similarity must lie in [0, 1]");
}

struct TrackerConfig {
  double drop_threshold = 0.80;
  double update_threshold = 0.95;
  double operating_zone_m = 0.5;
  double obstacle_stop_m = 0.5;
  double v_max_mps = 0.15;
  double w_max_rps = 0.5;
  double linear_gain = 0.3;
  double angular_gain = 1.0;
  double a_max_mps2 = 0.5;
  double dt_s = 0.1;
};

inline void validate(const TrackerConfig& c) {
  if (!(c.drop_threshold > 0.0 && c.drop_threshold <= c.update_threshold && c.update_threshold <= 1.0))
    throw InvalidArgument("tracker thresholds must satisfy 0 < drop <= update <= 1");
  for (double v : {c.operating_zone_m, c.obstacle_stop_m, c.v_max_mps, c.w_max_rps, c.linear_gain,
                   c.angular_gain, c.a_max_mps2, c.dt_s})
    if (!(v > 0.0)) throw InvalidArgument("tracker limits and gains must be positive");
}

enum class TrackerMode { Tracking, Waiting, Stopped };

inline const char* to_string(TrackerMode m) {
  switch (m) {
    case TrackerMode::Tracking: return "tracking";
    case TrackerMode::Waiting: return "waiting";
    default: return "stopped";
  }
}

struct Velocity {
  double linear = 0.0;   // m/s
  double angular = 0.0;  // rad/s
  bool operator==(const Velocity&) const = default;
};

struct TrackerState {
  TrackerMode mode = TrackerMode::Waiting;
  Velocity last_command;
  int reference_age = 0;  // frames since the reference appearance was refreshed
};

struct SimFrame {
  std::vector<Detection> detections;
  std::optional<double> target_distance_m;
  std::optional<double> target_bearing_rad;  // positive = target to the left, turn left
  double obstacle_distance_m = 1e9;
};

// Most similar detection if it clears the drop threshold; ties keep the
// earliest entry.
inline std::optional<Detection> select_target(const std::vector<Detection>& detections,
                                              double drop_threshold) {
  if (detections.empty()) return std::nullopt;
  std::size_t best = 0;
  for (std::size_t i = 1; i < detections.size(); ++i)
    if (detections[i].similarity > detections[best].similarity) best = i;
  if (detections[best].similarity >= drop_threshold) return detections[best];
  return std::nullopt;
}

inline TrackerState update_reference(TrackerState s, const Detection& selected, double update_threshold) {
  if (selected.similarity >= update_threshold)
    s.reference_age = 0;
  else
    ++s.reference_age;
  return s;
}

struct CommandResult {
  Velocity target;
  TrackerMode mode = TrackerMode::Waiting;
};

// Target velocities for one frame. `has_target` says whether select_target
// found someone; distance and bearing come from the frame.
inline CommandResult command(bool has_target, const SimFrame& f, const TrackerConfig& c) {
  CommandResult r;
  if (!has_target) return r;
  r.mode = TrackerMode::Tracking;
  const double d = f.target_distance_m.value_or(0.0);
  if (d > c.operating_zone_m) r.target.linear = std::clamp(c.linear_gain * (d - c.operating_zone_m), 0.0, c.v_max_mps);
  // Obstacles gate only the linear channel; centring continues.
  if (f.obstacle_distance_m <= c.obstacle_stop_m) {
    r.target.linear = 0.0;
    r.mode = TrackerMode::Stopped;
  }
  r.target.angular = std::clamp(c.angular_gain * f.target_bearing_rad.value_or(0.0), -c.w_max_rps, c.w_max_rps);
  return r;
}

inline CommandResult command(const TrackerState&, const SimFrame& f, const TrackerConfig& c) {
  return command(select_target(f.detections, c.drop_threshold).has_value(), f, c);
}

// Moves each component toward the target by at most a_max * dt. Landing on
// the target is exact, so ramps never overshoot.
inline double smooth(double prev, double target, double a_max, double dt) {
  if (!(a_max > 0.0 && dt > 0.0)) throw InvalidArgument("smoother needs a_max > 0 and dt > 0");
  const double limit = a_max * dt;
  const double diff = target - prev;
  if (std::abs(diff) <= limit) return target;
  return diff > 0.0 ? prev + limit : prev - limit;
}

inline Velocity smooth(const Velocity& prev, const Velocity& target, double a_max, double dt) {
  return {smooth(prev.linear, target.linear, a_max, dt), smooth(prev.angular, target.angular, a_max, dt)};
}

struct TraceStep {
  int frame = 0;
  TrackerState state;  // after this frame
  std::optional<Detection> selected;
  Velocity target;
  Velocity command;  // smoothed, equals state.last_command
};

inline std::vector<TraceStep> run_script(const std::vector<SimFrame>& frames, const TrackerConfig& c,
                                         TrackerState state = {}) {
  validate(c);
  std::vector<TraceStep> trace;
  trace.reserve(frames.size());
  for (std::size_t i = 0; i < frames.size(); ++i) {
    const SimFrame& f = frames[i];
    TraceStep step;
    step.frame = static_cast<int>(i);
    step.selected = select_target(f.detections, c.drop_threshold);
    if (step.selected)
      state = update_reference(state, *step.selected, c.update_threshold);
    else
      ++state.reference_age;
    const CommandResult cmd = command(step.selected.has_value(), f, c);
    state.mode = cmd.mode;
    state.last_command = smooth(state.last_command, cmd.target, c.a_max_mps2, c.dt_s);
    step.state = state;
    step.target = cmd.target;
    step.command = state.last_command;
    trace.push_back(step);
  }
  return trace;
}

// ---- scenario / trace files ------------------------------------------------
//
// Scenario CSV, one frame per line after a header:
//   similarities,target_distance_m,target_bearing_rad,obstacle_distance_m
// similarities is a ';'-separated list (may be empty). Empty distance or
// bearing fields mean "not measured"; an empty obstacle field means no
// obstacle. Detection boxes are not part of the script and are laid out
// side by side in list order.

namespace detail {
inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline double parse_real(const std::string& field, int line, const char* what) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(field, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != field.size() || !std::isfinite(v))
    throw FormatError("scenario line " + std::to_string(line) + ": bad " + what + " '" + field + "'");
  return v;
}
}  // namespace detail

inline std::vector<SimFrame> read_scenario_csv(std::istream& is) {
  std::vector<SimFrame> frames;
  std::string line;
  int lineno = 0;
  bool header = true;
  while (std::getline(is, line)) {
    ++lineno;
    const std::string t = detail::trim(line);
    if (t.empty() || t[0] == '#') continue;
    if (header) {
      header = false;
      if (t.rfind("similarities", 0) == 0) continue;
    }
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string f;
    while (std::getline(ss, f, ',')) fields.push_back(detail::trim(f));
    if (!line.empty() && line.back() == ',') fields.emplace_back();
    if (fields.size() != 4)
      throw FormatError("scenario line " + std::to_string(lineno) + ": expected 4 fields");

    SimFrame fr;
    if (!fields[0].empty()) {
      std::stringstream ls(fields[0]);
      std::string item;
      int k = 0;
      while (std::getline(ls, item, ';')) {
        Detection d;
        d.similarity = detail::parse_real(detail::trim(item), lineno, "similarity");
        d.bbox = {100.0 * k, 0.0, 80.0, 200.0};
        if (!(d.similarity >= 0.0 && d.similarity <= 1.0))
          throw FormatError("scenario line " + std::to_string(lineno) + ": similarity outside [0, 1]");
        fr.detections.push_back(d);
        ++k;
      }
    }
    if (!fields[1].empty()) fr.target_distance_m = detail::parse_real(fields[1], lineno, "distance");
    if (!fields[2].empty()) fr.target_bearing_rad = detail::parse_real(fields[2], lineno, "bearing");
    if (!fields[3].empty()) fr.obstacle_distance_m = detail::parse_real(fields[3], lineno, "obstacle distance");
    if ((fr.target_distance_m && *fr.target_distance_m < 0.0) || fr.obstacle_distance_m < 0.0)
      throw FormatError("scenario line " + std::to_string(lineno) + ": negative distance");
    frames.push_back(std::move(fr));
  }
  return frames;
}

inline void write_tracker_trace_csv(std::ostream& os, const std::vector<TraceStep>& trace) {
  os << "frame,mode,selected_similarity,reference_age,target_linear,target_angular,linear,angular\n";
  char buf[192];
  for (const TraceStep& s : trace) {
    char sim[32] = "";
    if (s.selected) std::snprintf(sim, sizeof sim, "%.4f", s.selected->similarity);
    std::snprintf(buf, sizeof buf, "%d,%s,%s,%d,%.6f,%.6f,%.6f,%.6f\n", s.frame, to_string(s.state.mode), sim,
                  s.state.reference_age, s.target.linear, s.target.angular, s.command.linear, s.command.angular);
    os << buf;
  }
}

}  // namespace photobot
