#pragma once

// Synthetic scene: a viewpoint grid, a planar stick-figure person and the
// pinhole projection that turns a robot pose into a keypoint vector.
//
// Ground-plane coordinates (x, y) map to 3D as X = x, Z = y, Y = up, so
// yaw 0 looks along +y and a forward translation at yaw 0 increases iy.

#include <array>
#include <cmath>
#include <cstdint>
#include <string_view>
#include <vector>

#include "photobot/error.hpp"
#include "photobot/panorama.hpp"

namespace photobot {

inline constexpr int kNumKeypoints = 14;

enum class Joint : int {
  Head, Neck,
  LeftShoulder, RightShoulder,
  LeftElbow, RightElbow,
  LeftWrist, RightWrist,
  LeftHip, RightHip,
  LeftKnee, RightKnee,
  LeftAnkle, RightAnkle,
};

inline constexpr std::array<std::string_view, kNumKeypoints> kJointNames = {
    "head",       "neck",        "l_shoulder", "r_shoulder", "l_elbow",
    "r_elbow",    "l_wrist",     "r_wrist",    "l_hip",      "r_hip",
    "l_knee",     "r_knee",      "l_ankle",    "r_ankle"};

// Limb segments drawn by the panorama renderer.
inline constexpr std::array<std::pair<Joint, Joint>, 13> kBones = {{
    {Joint::Head, Joint::Neck},
    {Joint::LeftShoulder, Joint::RightShoulder},
    {Joint::LeftShoulder, Joint::LeftElbow},
    {Joint::LeftElbow, Joint::LeftWrist},
    {Joint::RightShoulder, Joint::RightElbow},
    {Joint::RightElbow, Joint::RightWrist},
    {Joint::Neck, Joint::LeftHip},
    {Joint::Neck, Joint::RightHip},
    {Joint::LeftHip, Joint::RightHip},
    {Joint::LeftHip, Joint::LeftKnee},
    {Joint::LeftKnee, Joint::LeftAnkle},
    {Joint::RightHip, Joint::RightKnee},
    {Joint::RightKnee, Joint::RightAnkle},
}};

// Joint angles in the person's frontal plane, radians.
//   shoulders: 0 = arm horizontal (T-pose), +pi/2 = straight up, -pi/2 = down
//   elbows:    bend of the forearm relative to the upper arm, same sense
//   hips:      abduction away from the vertical
//   knees:     bend relative to the thigh
struct PoseParams {
  double left_shoulder = 0.0, right_shoulder = 0.0;
  double left_elbow = 0.0, right_elbow = 0.0;
  double left_hip = 0.0, right_hip = 0.0;
  double left_knee = 0.0, right_knee = 0.0;

  friend bool operator==(const PoseParams&, const PoseParams&) = default;

  static PoseParams arms_down() {
    PoseParams p;
    p.left_shoulder = p.right_shoulder = -kPi / 2 + 0.15;
    return p;
  }
  static PoseParams arms_up() {
    PoseParams p;
    p.left_shoulder = p.right_shoulder = kPi / 2 - 0.3;
    p.left_elbow = p.right_elbow = 0.4;
    return p;
  }
};

struct PersonModel {
  double x_m = 0.4;
  double y_m = 2.8;
  double facing_rad = kPi;  // same convention as robot yaw; pi faces -y, toward the grid
  double height_m = 1.7;
  PoseParams pose = PoseParams::arms_down();
};

struct Point3 {
  double x = 0.0, y = 0.0, z = 0.0;
};

using Skeleton = std::array<Point3, kNumKeypoints>;

struct Scene {
  int grid_nx = 5;
  int grid_ny = 5;
  double spacing_m = 0.2;
  int n_yaw = 24;
  PersonModel person;
  PerspectiveCamera camera;  // intrinsics only, yaw ignored
  double camera_height_m = 0.6;

  int num_states() const { return grid_nx * grid_ny * n_yaw; }
  double yaw_step_rad() const { return kTwoPi / n_yaw; }
};

inline void validate(const Scene& s) {
  if (s.grid_nx < 1 || s.grid_ny < 1) throw InvalidArgument("scene grid must be at least 1x1");
  if (!(s.spacing_m > 0.0)) throw InvalidArgument("scene spacing must be positive");
  if (s.n_yaw < 1 || 360 % s.n_yaw != 0) throw InvalidArgument("n_yaw must divide 360");
  if (!(s.person.height_m > 0.0)) throw InvalidArgument("person height must be positive");
  validate(s.camera);
}

struct RobotPose {
  int ix = 0;
  int iy = 0;
  int yaw_index = 0;

  friend bool operator==(const RobotPose&, const RobotPose&) = default;
};

inline bool in_range(const Scene& s, const RobotPose& p) {
  return p.ix >= 0 && p.ix < s.grid_nx && p.iy >= 0 && p.iy < s.grid_ny && p.yaw_index >= 0 &&
         p.yaw_index < s.n_yaw;
}

// Flattened (x0, y0, x1, y1, ...) pixel coordinates.
struct KeypointVector {
  std::vector<double> coords;

  std::size_t count() const { return coords.size() / 2; }
  double x(std::size_t i) const { return coords[2 * i]; }
  double y(std::size_t i) const { return coords[2 * i + 1]; }

  friend bool operator==(const KeypointVector&, const KeypointVector&) = default;
};

struct WorldPose {
  double x_m = 0.0;
  double y_m = 0.0;
  double yaw_rad = 0.0;
};

inline WorldPose robot_world_pose(const Scene& s, const RobotPose& p) {
  if (!in_range(s, p)) throw InvalidArgument("robot pose outside the scene grid");
  return {p.ix * s.spacing_m, p.iy * s.spacing_m, p.yaw_index * s.yaw_step_rad()};
}

// Forward kinematics in the frontal plane, then placed in the world.
// Neutral pose: ankles on the ground and head top at height_m.
inline Skeleton skeleton_keypoints_3d(const PersonModel& person) {
  const double h = person.height_m;
  const PoseParams& q = person.pose;

  struct Planar {
    double s = 0.0, up = 0.0;  // s: toward the person's left
  };
  std::array<Planar, kNumKeypoints> j{};
  auto at = [&](Joint k) -> Planar& { return j[static_cast<int>(k)]; };

  const double shoulder_h = 0.82 * h, shoulder_w = 0.13 * h;
  const double hip_h = 0.53 * h, hip_w = 0.09 * h;
  const double upper_arm = 0.17 * h, forearm = 0.16 * h;
  const double thigh = 0.245 * h, shin = 0.285 * h;

  at(Joint::Head) = {0.0, h};
  at(Joint::Neck) = {0.0, 0.87 * h};

  auto arm = [&](Joint shoulder, Joint elbow, Joint wrist, double side, double a, double e) {
    const Planar sh{side * shoulder_w, shoulder_h};
    const Planar el{sh.s + side * upper_arm * std::cos(a), sh.up + upper_arm * std::sin(a)};
    const Planar wr{el.s + side * forearm * std::cos(a + e), el.up + forearm * std::sin(a + e)};
    at(shoulder) = sh;
    at(elbow) = el;
    at(wrist) = wr;
  };
  arm(Joint::LeftShoulder, Joint::LeftElbow, Joint::LeftWrist, 1.0, q.left_shoulder, q.left_elbow);
  arm(Joint::RightShoulder, Joint::RightElbow, Joint::RightWrist, -1.0, q.right_shoulder,
      q.right_elbow);

  auto leg = [&](Joint hip, Joint knee, Joint ankle, double side, double a, double k) {
    const Planar hp{side * hip_w, hip_h};
    const Planar kn{hp.s + side * thigh * std::sin(a), hp.up - thigh * std::cos(a)};
    const Planar an{kn.s + side * shin * std::sin(a - k), kn.up - shin * std::cos(a - k)};
    at(hip) = hp;
    at(knee) = kn;
    at(ankle) = an;
  };
  leg(Joint::LeftHip, Joint::LeftKnee, Joint::LeftAnkle, 1.0, q.left_hip, q.left_knee);
  leg(Joint::RightHip, Joint::RightKnee, Joint::RightAnkle, -1.0, q.right_hip, q.right_knee);

  const double ground =
      std::min(at(Joint::LeftAnkle).up, at(Joint::RightAnkle).up);

  // Person's left in ground coordinates for a facing angle phi.
  const double left_x = -std::cos(person.facing_rad);
  const double left_y = std::sin(person.facing_rad);

  Skeleton out{};
  for (int k = 0; k < kNumKeypoints; ++k) {
    out[k] = {person.x_m + j[k].s * left_x, j[k].up - ground, person.y_m + j[k].s * left_y};
  }
  return out;
}

struct Projection {
  KeypointVector keypoints;
  bool all_inside = true;  // every joint in front of the camera and strictly inside the frame
};

// Project the person seen from a continuous camera placement. Joints behind
// the image plane are pushed to the frame border along their image-plane
// direction from the center; joints in front but outside are clamped.
inline Projection project_person(const Scene& s, double cam_x, double cam_y, double yaw,
                                 const PerspectiveCamera& cam) {
  const double dxr = s.person.x_m - cam_x;
  const double dyr = s.person.y_m - cam_y;
  if (std::hypot(dxr, dyr) < 0.01)
    throw DegenerateGeometry("person coincides with the camera position");

  const Skeleton joints = skeleton_keypoints_3d(s.person);
  const double f = cam.focal_px();
  const double W = cam.width_px, H = cam.height_px;
  const double cx = W / 2.0, cy = H / 2.0;

  Projection out;
  out.keypoints.coords.resize(2 * kNumKeypoints);
  for (int k = 0; k < kNumKeypoints; ++k) {
    const Direction rel{joints[k].x - cam_x, joints[k].y - s.camera_height_m, joints[k].z - cam_y};
    const Direction local = world_to_yaw(rel, yaw);
    double u = 0.0, v = 0.0;
    if (local.z > 1e-6) {
      u = cx + f * local.x / local.z;
      v = cy - f * local.y / local.z;
      if (!(u > 0.0 && u < W && v > 0.0 && v < H)) out.all_inside = false;
      u = std::clamp(u, 0.0, W);
      v = std::clamp(v, 0.0, H);
    } else {
      out.all_inside = false;
      double du = local.x, dv = -local.y;
      if (du == 0.0 && dv == 0.0) dv = 1.0;
      const double tu = du != 0.0 ? cx / std::abs(du) : INFINITY;
      const double tv = dv != 0.0 ? cy / std::abs(dv) : INFINITY;
      const double t = std::min(tu, tv);
      u = std::clamp(cx + t * du, 0.0, W);
      v = std::clamp(cy + t * dv, 0.0, H);
      // Land exactly on the border the ray leaves through.
      if (tu <= tv) u = du > 0.0 ? W : 0.0;
      else v = dv > 0.0 ? H : 0.0;
    }
    out.keypoints.coords[2 * k] = u;
    out.keypoints.coords[2 * k + 1] = v;
  }
  return out;
}

inline KeypointVector project_keypoints(const Scene& s, const RobotPose& pose) {
  const WorldPose wp = robot_world_pose(s, pose);
  return project_person(s, wp.x_m, wp.y_m, wp.yaw_rad, s.camera).keypoints;
}

// Background: sky/floor gradient split at the horizon with dark stripes every
// 30 degrees of longitude. The person is drawn as pure-red limb segments,
// a colour the background never uses.
inline constexpr Rgb kPersonColor{255, 0, 0};

inline EquirectImage render_synthetic_equirect(const Scene& s, int ix, int iy, int height_px = 256) {
  if (!in_range(s, RobotPose{ix, iy, 0})) throw InvalidArgument("grid cell outside the scene");
  if (height_px < 4) throw InvalidArgument("panorama height must be >= 4");
  const int H = height_px, W = 2 * height_px;
  EquirectImage img(W, H);

  for (int y = 0; y < H; ++y) {
    const double t = (y + 0.5) / H;  // 0 top .. 1 bottom
    Rgb base;
    if (t < 0.5) {
      const double k = t / 0.5;
      base = {static_cast<std::uint8_t>(90 + 100 * k), static_cast<std::uint8_t>(140 + 80 * k), 235};
    } else {
      const double k = (t - 0.5) / 0.5;
      base = {static_cast<std::uint8_t>(150 - 70 * k), static_cast<std::uint8_t>(120 - 50 * k),
              static_cast<std::uint8_t>(90 - 40 * k)};
    }
    for (int x = 0; x < W; ++x) img.at(x, y) = base;
  }
  for (int deg = -180; deg < 180; deg += 30) {
    const int col = static_cast<int>(std::floor((deg + 180.0) / 360.0 * W));
    for (int y = 0; y < H; ++y) img.at(col, y) = {40, 40, 40};
  }

  const double cam_x = ix * s.spacing_m, cam_y = iy * s.spacing_m;
  const Skeleton joints = skeleton_keypoints_3d(s.person);
  auto plot = [&](const Point3& p) {
    const Direction d{p.x - cam_x, p.y - s.camera_height_m, p.z - cam_y};
    if (d.norm() < 1e-9) return;
    const PixelPoint px = ray_to_equirect(d.normalized(), W, H);
    const int cx = static_cast<int>(std::floor(px.x));
    const int cy = static_cast<int>(std::floor(px.y));
    for (int oy = 0; oy <= 1; ++oy)
      for (int ox = 0; ox <= 1; ++ox) {
        const int yy = std::clamp(cy + oy - 1 + (px.y - cy >= 0.5 ? 1 : 0), 0, H - 1);
        const int xx = detail::wrap_column(cx + ox - 1 + (px.x - cx >= 0.5 ? 1 : 0), W);
        img.at(xx, yy) = kPersonColor;
      }
  };
  constexpr int kSamples = 256;
  for (const auto& [a, b] : kBones) {
    const Point3& pa = joints[static_cast<int>(a)];
    const Point3& pb = joints[static_cast<int>(b)];
    for (int i = 0; i <= kSamples; ++i) {
      const double t = static_cast<double>(i) / kSamples;
      plot({pa.x + t * (pb.x - pa.x), pa.y + t * (pb.y - pa.y), pa.z + t * (pb.z - pa.z)});
    }
  }
  return img;
}

}  // namespace photobot
