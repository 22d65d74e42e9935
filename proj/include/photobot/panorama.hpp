#pragma once

// Equirectangular <-> pinhole projection and panorama de-warping.
//
// Conventions shared by every module:
//   world/camera axes: +z forward, +x right, +y up
//   yaw: radians, 0 = world forward, positive clockwise seen from above,
//        so yaw = pi/2 turns the optical axis (0,0,1) into (1,0,0)
//   longitude = atan2(x, z) in [-pi, pi), latitude = asin(y)
//   panorama column x = (lon + pi) / (2 pi) * W, row y = (pi/2 - lat) / pi * H

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <numbers>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "photobot/error.hpp"

namespace photobot {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

inline double deg2rad(double deg) { return deg * kPi / 180.0; }
inline double rad2deg(double rad) { return rad * 180.0 / kPi; }

struct Rgb {
  std::uint8_t r = 0, g = 0, b = 0;
  friend bool operator==(const Rgb&, const Rgb&) = default;
};

// Row-major 8-bit RGB raster.
class RgbImage {
 public:
  RgbImage() = default;
  RgbImage(int width, int height, Rgb fill = {})
      : width_(width), height_(height) {
    if (width < 1 || height < 1) throw InvalidArgument("image dimensions must be positive");
    pixels_.assign(static_cast<std::size_t>(width) * height, fill);
  }

  int width() const { return width_; }
  int height() const { return height_; }

  Rgb& at(int x, int y) { return pixels_[index(x, y)]; }
  const Rgb& at(int x, int y) const { return pixels_[index(x, y)]; }

  const std::vector<Rgb>& pixels() const { return pixels_; }

  friend bool operator==(const RgbImage&, const RgbImage&) = default;

 private:
  std::size_t index(int x, int y) const {
    return static_cast<std::size_t>(y) * width_ + x;
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<Rgb> pixels_;
};

// Full-sphere panorama: width is exactly twice the height.
class EquirectImage {
 public:
  explicit EquirectImage(RgbImage image) : image_(std::move(image)) {
    if (image_.width() != 2 * image_.height())
      throw InvalidArgument("equirectangular image needs width == 2 * height");
    if (image_.width() < 8) throw InvalidArgument("equirectangular image needs width >= 8");
  }
  EquirectImage(int width, int height, Rgb fill = {})
      : EquirectImage(RgbImage(width, height, fill)) {}

  int width() const { return image_.width(); }
  int height() const { return image_.height(); }
  Rgb& at(int x, int y) { return image_.at(x, y); }
  const Rgb& at(int x, int y) const { return image_.at(x, y); }
  const RgbImage& image() const { return image_; }

  friend bool operator==(const EquirectImage&, const EquirectImage&) = default;

 private:
  RgbImage image_;
};

struct PerspectiveCamera {
  double hfov_rad = deg2rad(78.0);
  int width_px = 640;
  int height_px = 480;
  double yaw_rad = 0.0;
  double pitch_rad = 0.0;  // always 0 here

  double focal_px() const { return (width_px / 2.0) / std::tan(hfov_rad / 2.0); }

  PerspectiveCamera with_yaw(double yaw) const {
    PerspectiveCamera c = *this;
    c.yaw_rad = yaw;
    return c;
  }
};

inline void validate(const PerspectiveCamera& cam) {
  if (!(cam.hfov_rad > 0.0 && cam.hfov_rad < kPi))
    throw InvalidArgument("camera hfov must lie in (0, pi)");
  if (cam.width_px < 2 || cam.height_px < 2)
    throw InvalidArgument("camera resolution must be at least 2x2");
  if (!std::isfinite(cam.yaw_rad) || cam.pitch_rad != 0.0)
    throw InvalidArgument("camera yaw must be finite and pitch zero");
}

struct Direction {
  double x = 0.0, y = 0.0, z = 1.0;

  double norm() const { return std::sqrt(x * x + y * y + z * z); }
  Direction normalized() const {
    const double n = norm();
    return {x / n, y / n, z / n};
  }
};

struct PixelPoint {
  double x = 0.0, y = 0.0;
};

// Rotate a camera-frame direction into the world by a clockwise yaw.
inline Direction yaw_to_world(const Direction& d, double yaw) {
  const double c = std::cos(yaw), s = std::sin(yaw);
  return {c * d.x + s * d.z, d.y, -s * d.x + c * d.z};
}

inline Direction world_to_yaw(const Direction& d, double yaw) {
  return yaw_to_world(d, -yaw);
}

inline Direction pixel_to_ray(const PerspectiveCamera& cam, double u, double v) {
  if (!std::isfinite(u) || !std::isfinite(v))
    throw InvalidArgument("pixel_to_ray: non-finite pixel coordinate");
  validate(cam);
  const double f = cam.focal_px();
  const Direction local{(u - cam.width_px / 2.0) / f, -(v - cam.height_px / 2.0) / f, 1.0};
  return yaw_to_world(local.normalized(), cam.yaw_rad);
}

// Inverse of pixel_to_ray; nullopt for directions at or behind the image plane.
inline std::optional<PixelPoint> ray_to_pixel(const PerspectiveCamera& cam, const Direction& dir) {
  const Direction local = world_to_yaw(dir, cam.yaw_rad);
  if (local.z <= 1e-12) return std::nullopt;
  const double f = cam.focal_px();
  return PixelPoint{cam.width_px / 2.0 + f * local.x / local.z,
                    cam.height_px / 2.0 - f * local.y / local.z};
}

inline double longitude(const Direction& d) {
  double lon = std::atan2(d.x, d.z);
  if (lon >= kPi) lon = -kPi;
  return lon;
}

inline double latitude(const Direction& d) {
  return std::asin(std::clamp(d.y, -1.0, 1.0));
}

inline PixelPoint ray_to_equirect(const Direction& dir, int width, int height) {
  const double lon = longitude(dir);
  const double lat = latitude(dir);
  return {(lon + kPi) / kTwoPi * width, (kPi / 2.0 - lat) / kPi * height};
}

inline Direction equirect_to_ray(double x, double y, int width, int height) {
  const double lon = x / width * kTwoPi - kPi;
  const double lat = kPi / 2.0 - y / height * kPi;
  return {std::cos(lat) * std::sin(lon), std::sin(lat), std::cos(lat) * std::cos(lon)};
}

namespace detail {

inline int wrap_column(long long col, int width) {
  long long m = col % width;
  if (m < 0) m += width;
  return static_cast<int>(m);
}

inline std::uint8_t to_channel(double v) {
  return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 255.0)));
}

// Bilinear lookup where the integer part of the column is already split off,
// so a whole-column yaw shift touches exactly the same weights.
inline Rgb sample_split(const EquirectImage& img, long long col0, double fx, double sy) {
  const double y0f = std::floor(sy);
  const double fy = sy - y0f;
  const int h = img.height();
  const int y0 = std::clamp(static_cast<int>(y0f), 0, h - 1);
  const int y1 = std::clamp(static_cast<int>(y0f) + 1, 0, h - 1);
  const int x0 = wrap_column(col0, img.width());
  const int x1 = wrap_column(col0 + 1, img.width());

  const Rgb& p00 = img.at(x0, y0);
  const Rgb& p10 = img.at(x1, y0);
  const Rgb& p01 = img.at(x0, y1);
  const Rgb& p11 = img.at(x1, y1);
  auto mix = [&](std::uint8_t a, std::uint8_t b, std::uint8_t c, std::uint8_t d) {
    const double top = a * (1.0 - fx) + b * fx;
    const double bottom = c * (1.0 - fx) + d * fx;
    return to_channel(top * (1.0 - fy) + bottom * fy);
  };
  return {mix(p00.r, p10.r, p01.r, p11.r), mix(p00.g, p10.g, p01.g, p11.g),
          mix(p00.b, p10.b, p01.b, p11.b)};
}

}  // namespace detail

// Bilinear sample at continuous panorama coordinates (pixel centers sit at
// integer + 0.5). Columns wrap, rows clamp.
inline Rgb sample_bilinear(const EquirectImage& img, double x, double y) {
  const double sx = x - 0.5;
  const double col = std::floor(sx);
  return detail::sample_split(img, static_cast<long long>(col), sx - col, y - 0.5);
}

// Shift every column by `columns` (positive = content moves right).
inline EquirectImage rotate_equirect(const EquirectImage& img, int columns) {
  EquirectImage out(img.width(), img.height());
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x)
      out.at(detail::wrap_column(static_cast<long long>(x) + columns, img.width()), y) = img.at(x, y);
  return out;
}

// Rectilinear view of the panorama through `cam`. With zero pitch the yaw is
// a pure longitude offset, so it is applied in column space after the
// camera-frame mapping; the offset is quantised to 2^-20 column so yaw
// periodicity and whole-column shifts reproduce bit-identical output.
inline RgbImage dewarp_crop(const EquirectImage& img, const PerspectiveCamera& cam) {
  validate(cam);
  const int W = img.width();
  const int H = img.height();
  RgbImage out(cam.width_px, cam.height_px);

  double shift = cam.yaw_rad / kTwoPi * W;
  shift = std::fmod(shift, static_cast<double>(W));
  if (shift < 0) shift += W;
  shift = std::nearbyint(shift * 1048576.0) / 1048576.0;
  const double shift_int = std::floor(shift);
  const double shift_frac = shift - shift_int;

  PerspectiveCamera local = cam;
  local.yaw_rad = 0.0;
  for (int j = 0; j < cam.height_px; ++j) {
    for (int i = 0; i < cam.width_px; ++i) {
      const Direction d = pixel_to_ray(local, i + 0.5, j + 0.5);
      const PixelPoint p = ray_to_equirect(d, W, H);
      const double sx = p.x + shift_frac - 0.5;
      const double col = std::floor(sx);
      out.at(i, j) = detail::sample_split(
          img, static_cast<long long>(col) + static_cast<long long>(shift_int), sx - col, p.y - 0.5);
    }
  }
  return out;
}

inline std::vector<RgbImage> generate_rotation_crops(const EquirectImage& img,
                                                     const PerspectiveCamera& cam, int n = 24) {
  if (n < 1) throw InvalidArgument("generate_rotation_crops: n must be >= 1");
  std::vector<RgbImage> crops;
  crops.reserve(n);
  for (int k = 0; k < n; ++k) crops.push_back(dewarp_crop(img, cam.with_yaw(k * kTwoPi / n)));
  return crops;
}

// ---- binary PPM (P6) -------------------------------------------------------

inline void write_ppm(std::ostream& os, const RgbImage& img) {
  os << "P6\n" << img.width() << ' ' << img.height() << "\n255\n";
  for (const Rgb& p : img.pixels()) {
    const char bytes[3] = {static_cast<char>(p.r), static_cast<char>(p.g), static_cast<char>(p.b)};
    os.write(bytes, 3);
  }
}

inline void write_ppm(const std::filesystem::path& path, const RgbImage& img) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw FormatError("cannot open " + path.string() + " for writing");
  write_ppm(os, img);
}

namespace detail {
inline int read_ppm_int(std::istream& is) {
  is >> std::ws;
  while (is.peek() == '#') {
    std::string comment;
    std::getline(is, comment);
    is >> std::ws;
  }
  int v = -1;
  if (!(is >> v)) throw FormatError("ppm: malformed header");
  return v;
}
}  // namespace detail

inline RgbImage read_ppm(std::istream& is) {
  std::string magic;
  if (!(is >> magic) || magic != "P6") throw FormatError("ppm: expected P6 magic");
  const int w = detail::read_ppm_int(is);
  const int h = detail::read_ppm_int(is);
  const int maxval = detail::read_ppm_int(is);
  if (w < 1 || h < 1 || maxval != 255) throw FormatError("ppm: unsupported dimensions or depth");
  is.get();  // single whitespace before raster
  RgbImage img(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      char bytes[3];
      if (!is.read(bytes, 3)) throw FormatError("ppm: truncated raster");
      img.at(x, y) = {static_cast<std::uint8_t>(bytes[0]), static_cast<std::uint8_t>(bytes[1]),
                      static_cast<std::uint8_t>(bytes[2])};
    }
  }
  return img;
}

inline RgbImage read_ppm(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FormatError("cannot open " + path.string());
  return read_ppm(is);
}

}  // namespace photobot
