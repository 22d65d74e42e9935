#pragma once

// Template selection and capture: candidate views cut from the panorama at
// several yaws and zoom levels, a containment filter, a pluggable scorer,
// argmax selection, the pose-triggered shutter and the matching episode.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "photobot/a2c.hpp"
#include "photobot/error.hpp"
#include "photobot/oracle.hpp"
#include "photobot/panorama.hpp"
#include "photobot/photo_env.hpp"
#include "photobot/world.hpp"

namespace photobot {

struct CandidateTemplate {
  KeypointVector keypoints;
  double yaw_rad = 0.0;
  int distance_level = 0;  // index into the FOV list; higher = tighter crop
  double hfov_rad = 0.0;
  std::optional<RgbImage> image;
  std::optional<double> score;
};

struct CandidateOptions {
  std::vector<double> yaws_rad;            // empty -> invalid
  std::vector<double> fov_levels_deg{78.0, 60.0, 45.0};
  bool with_images = false;
  int panorama_height_px = 256;
};

inline CandidateOptions default_candidate_options(const Scene& s) {
  CandidateOptions o;
  for (int k = 0; k < s.n_yaw; ++k) o.yaws_rad.push_back(k * s.yaw_step_rad());
  return o;
}

struct CandidateSet {
  std::vector<CandidateTemplate> kept;
  int generated = 0;  // before the containment filter
};

// Candidates seen from grid cell (ix, iy), ordered yaw-major then level.
// Views whose person keypoints are not all strictly inside the frame are
// dropped.
inline CandidateSet generate_candidates(const Scene& scene, int ix, int iy, const CandidateOptions& opt) {
  if (opt.yaws_rad.empty()) throw InvalidArgument("generate_candidates: empty yaw set");
  if (opt.fov_levels_deg.empty()) throw InvalidArgument("generate_candidates: empty distance level set");
  if (!in_range(scene, RobotPose{ix, iy, 0})) throw InvalidArgument("generate_candidates: cell outside the grid");

  std::optional<EquirectImage> pano;
  if (opt.with_images) pano = render_synthetic_equirect(scene, ix, iy, opt.panorama_height_px);

  const WorldPose wp = robot_world_pose(scene, RobotPose{ix, iy, 0});
  CandidateSet out;
  for (double yaw : opt.yaws_rad) {
    for (int level = 0; level < static_cast<int>(opt.fov_levels_deg.size()); ++level) {
      PerspectiveCamera cam = scene.camera;
      cam.hfov_rad = deg2rad(opt.fov_levels_deg[level]);
      cam.yaw_rad = yaw;
      ++out.generated;
      const Projection p = project_person(scene, wp.x_m, wp.y_m, yaw, cam);
      if (!p.all_inside) continue;
      CandidateTemplate c;
      c.keypoints = p.keypoints;
      c.yaw_rad = yaw;
      c.distance_level = level;
      c.hfov_rad = cam.hfov_rad;
      if (pano) c.image = dewarp_crop(*pano, cam);
      out.kept.push_back(std::move(c));
    }
  }
  return out;
}

// ---- scoring ---------------------------------------------------------------

struct ScorerSpec {
  std::string name = "heuristic";
  double w_thirds = 0.4;
  double w_size = 0.4;
  double w_headroom = 0.2;
  double target_height_ratio = 0.6;
  double target_headroom = 0.08;
  double headroom_tolerance = 0.2;  // half-width of the headroom kernel, frame fraction
};

inline double triangular(double value, double centre, double half_width) {
  return std::max(0.0, 1.0 - std::abs(value - centre) / half_width);
}

// Thirds: horizontal distance of the neck to the nearer vertical third-line,
// 1 on the line and 0 at W/6 or further (the frame centre).
// Size: person pixel height over frame height against the target ratio,
// kernel half-width equal to the ratio.
// Headroom: gap above the head as a frame fraction against the target.
inline double heuristic_score(const CandidateTemplate& c, int width_px, int height_px,
                              const ScorerSpec& spec = {}) {
  const KeypointVector& k = c.keypoints;
  if (k.count() != static_cast<std::size_t>(kNumKeypoints)) throw InvalidArgument("candidate keypoints have the wrong length");
  const double W = width_px, H = height_px;
  const double neck_x = k.x(static_cast<int>(Joint::Neck));
  const double d = std::min(std::abs(neck_x - W / 3.0), std::abs(neck_x - 2.0 * W / 3.0));
  const double thirds = std::max(0.0, 1.0 - d / (W / 6.0));

  double top = H, bottom = 0.0;
  for (std::size_t i = 0; i < k.count(); ++i) {
    top = std::min(top, k.y(i));
    bottom = std::max(bottom, k.y(i));
  }
  const double size = triangular((bottom - top) / H, spec.target_height_ratio, spec.target_height_ratio);
  const double headroom = triangular(k.y(static_cast<int>(Joint::Head)) / H, spec.target_headroom, spec.headroom_tolerance);
  return spec.w_thirds * thirds + spec.w_size * size + spec.w_headroom * headroom;
}

using Scorer = std::function<double(const CandidateTemplate&)>;

inline Scorer make_scorer(const ScorerSpec& spec, const PerspectiveCamera& frame) {
  if (spec.name != "heuristic") throw InvalidArgument("unknown scorer '" + spec.name + "'");
  if (spec.w_thirds < 0 || spec.w_size < 0 || spec.w_headroom < 0) throw InvalidArgument("scorer weights must be >= 0");
  if (!(spec.target_height_ratio > 0.0 && spec.headroom_tolerance > 0.0))
    throw InvalidArgument("scorer targets must be positive");
  return [spec, w = frame.width_px, h = frame.height_px](const CandidateTemplate& c) {
    return heuristic_score(c, w, h, spec);
  };
}

// Index of the highest score; ties keep the lowest index.
inline std::size_t argmax_index(const std::vector<double>& scores) {
  if (scores.empty()) throw NoCandidates("no candidates to select from");
  std::size_t best = 0;
  for (std::size_t i = 1; i < scores.size(); ++i)
    if (scores[i] > scores[best]) best = i;
  return best;
}

struct Selection {
  std::size_t index = 0;
  CandidateTemplate chosen;
  std::vector<double> scores;
};

// Scores are written back into the candidates.
inline Selection select_template(std::vector<CandidateTemplate>& candidates, const Scorer& scorer) {
  if (candidates.empty()) throw NoCandidates("no candidates to select from");
  Selection s;
  for (CandidateTemplate& c : candidates) {
    const double v = scorer(c);
    if (!std::isfinite(v)) throw InvalidArgument("scorer returned a non-finite value");
    c.score = v;
    s.scores.push_back(v);
  }
  s.index = argmax_index(s.scores);
  s.chosen = candidates[s.index];
  return s;
}

// Keeps candidates the robot can actually match from some grid state.
inline std::vector<CandidateTemplate> reachable_candidates(const std::vector<CandidateTemplate>& candidates,
                                                           const KeypointTable& table, double epsilon_px) {
  std::vector<CandidateTemplate> out;
  const Scene& s = table.scene();
  for (const CandidateTemplate& c : candidates) {
    for (int i = 0; i < s.num_states(); ++i) {
      if (keypoint_distance(table.at(pose_from_index(s, i)), c.keypoints) <= epsilon_px) {
        out.push_back(c);
        break;
      }
    }
  }
  return out;
}

inline void write_candidate_report_csv(std::ostream& os, const std::vector<CandidateTemplate>& cands,
                                       std::size_t selected) {
  os << "index,yaw_deg,distance_level,hfov_deg,score,selected\n";
  char buf[128];
  for (std::size_t i = 0; i < cands.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%zu,%.4f,%d,%.4f,%.10f,%d\n", i, rad2deg(cands[i].yaw_rad),
                  cands[i].distance_level, rad2deg(cands[i].hfov_rad), cands[i].score.value_or(0.0),
                  i == selected ? 1 : 0);
    os << buf;
  }
}

// ---- pose trigger ----------------------------------------------------------

// Centroid to the origin and RMS radius to 1.
inline std::vector<double> normalize_pose(const KeypointVector& k) {
  const std::size_t n = k.count();
  if (n == 0 || k.coords.size() % 2 != 0) throw InvalidArgument("pose needs at least one (x, y) pair");
  double cx = 0.0, cy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    cx += k.x(i);
    cy += k.y(i);
  }
  cx /= n;
  cy /= n;
  double ss = 0.0;
  for (std::size_t i = 0; i < n; ++i) ss += (k.x(i) - cx) * (k.x(i) - cx) + (k.y(i) - cy) * (k.y(i) - cy);
  const double rms = std::sqrt(ss / n);
  if (!(rms > 1e-12)) throw InvalidArgument("degenerate pose: all keypoints coincide");
  std::vector<double> out(2 * n);
  for (std::size_t i = 0; i < n; ++i) {
    out[2 * i] = (k.x(i) - cx) / rms;
    out[2 * i + 1] = (k.y(i) - cy) / rms;
  }
  return out;
}

inline double pose_similarity(const KeypointVector& a, const KeypointVector& b) {
  if (a.coords.size() != b.coords.size()) throw InvalidArgument("pose vectors differ in length");
  const auto na = normalize_pose(a), nb = normalize_pose(b);
  double ss = 0.0;
  for (std::size_t i = 0; i < na.size(); ++i) ss += (na[i] - nb[i]) * (na[i] - nb[i]);
  return std::exp(-std::sqrt(ss));
}

inline bool pose_trigger(const KeypointVector& current, const KeypointVector& trigger, double threshold = 0.9) {
  return pose_similarity(current, trigger) >= threshold;
}

// ---- matching episode ------------------------------------------------------

struct CaptureResult {
  KeypointVector final_keypoints;
  std::vector<TraceRow> trace;
  bool success = false;
  int actions = 0;
};

inline CaptureResult match_and_capture(const Controller& ctl, std::shared_ptr<const KeypointTable> table,
                                       const KeypointVector& goal, const EnvConfig& cfg,
                                       const RobotPose& start, Rng& rng) {
  PhotoEnv env(std::move(table), cfg);
  const Observation first = env.reset(goal, start);
  EpisodeOutcome ep = run_episode(env, first, ctl, rng);
  return {std::move(ep.final_keypoints), std::move(ep.trace), ep.success, ep.actions};
}

// Top-down view of an episode: rows run from iy = ny-1 (top) to 0, '.' an
// unvisited cell, 'S' the start, 'E' the end, '*' other visited cells, 'P'
// the person's cell when it lies on the grid. Final heading is printed below.
inline std::string render_ascii_path(const Scene& s, const std::vector<TraceRow>& trace) {
  if (trace.empty()) return "";
  std::vector<std::string> grid(s.grid_ny, std::string(s.grid_nx, '.'));
  for (const TraceRow& r : trace) grid[r.pose.iy][r.pose.ix] = '*';
  grid[trace.front().pose.iy][trace.front().pose.ix] = 'S';
  grid[trace.back().pose.iy][trace.back().pose.ix] = 'E';
  const int px = static_cast<int>(std::lround(s.person.x_m / s.spacing_m));
  const int py = static_cast<int>(std::lround(s.person.y_m / s.spacing_m));
  std::string out;
  char buf[96];
  if (py >= s.grid_ny && px >= 0 && px < s.grid_nx) {
    std::string row(s.grid_nx, ' ');
    row[px] = 'P';
    std::snprintf(buf, sizeof buf, "   person at (%.2f m, %.2f m)\n", s.person.x_m, s.person.y_m);
    out += row + buf;
  }
  for (int y = s.grid_ny - 1; y >= 0; --y) {
    if (px >= 0 && px < s.grid_nx && py == y) grid[y][px] = 'P';
    out += grid[y] + '\n';
  }
  const RobotPose& e = trace.back().pose;
  std::snprintf(buf, sizeof buf, "end (%d,%d) yaw %.0f deg after %d actions\n", e.ix, e.iy,
                rad2deg(e.yaw_index * s.yaw_step_rad()), trace.back().step);
  out += buf;
  return out;
}

}  // namespace photobot
