#pragma once

// Text formats for trained parameters and keypoint templates.
//
// Params file (version 1), whitespace separated, reals at 17 digits:
//
//   photobot-params 1
//   seed <u64>
//   shape <input> <actions> <n_hidden> <h1> ... <hn>
//   normalization <n>          then n lines "<offset> <scale>"
//   theta <n>                  then n lines, one weight each
//   template <2K>              then 2K lines, one coordinate each
//   config-begin
//   <the resolved run config, same syntax as --config files>
//   config-end
//
// Template file:
//
//   <K> <frame width> <frame height>
//   <name> <x> <y>             K lines, joint order as in kJointNames

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "photobot/config.hpp"
#include "photobot/error.hpp"
#include "photobot/policy_net.hpp"
#include "photobot/world.hpp"

namespace photobot {

struct SavedPolicy {
  PolicyParams params;
  KeypointVector goal;
  RunConfig config;
  std::uint64_t seed = 0;
};

namespace detail {
inline void expect_word(std::istream& is, const std::string& word) {
  std::string got;
  if (!(is >> got) || got != word) throw FormatError("params file: expected '" + word + "', got '" + got + "'");
}

template <class T>
T read_value(std::istream& is, const char* what) {
  T v{};
  if (!(is >> v)) throw FormatError(std::string("params file: cannot read ") + what);
  return v;
}

inline double read_real(std::istream& is, const char* what) {
  std::string tok;
  if (!(is >> tok)) throw FormatError(std::string("params file: cannot read ") + what);
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(tok, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != tok.size() || !std::isfinite(v)) throw FormatError(std::string("params file: bad ") + what + " '" + tok + "'");
  return v;
}
}  // namespace detail

inline void write_params(std::ostream& os, const SavedPolicy& s) {
  const PolicyParams& p = s.params;
  os << "photobot-params 1\n";
  os << "seed " << s.seed << '\n';
  os << "shape " << p.shape().input << ' ' << p.shape().actions << ' ' << p.shape().hidden.size();
  for (int h : p.shape().hidden) os << ' ' << h;
  os << "\nnormalization " << p.shape().input << '\n';
  for (int i = 0; i < p.shape().input; ++i)
    os << detail::fmt_real(p.input_offset()[i]) << ' ' << detail::fmt_real(p.input_scale()[i]) << '\n';
  os << "theta " << p.size() << '\n';
  for (double v : p.theta()) os << detail::fmt_real(v) << '\n';
  os << "template " << s.goal.coords.size() << '\n';
  for (double v : s.goal.coords) os << detail::fmt_real(v) << '\n';
  os << "config-begin\n";
  write_config(os, s.config);
  os << "config-end\n";
}

inline SavedPolicy read_params(std::istream& is) {
  SavedPolicy s;
  detail::expect_word(is, "photobot-params");
  if (detail::read_value<int>(is, "version") != 1) throw FormatError("params file: unsupported version");
  detail::expect_word(is, "seed");
  s.seed = detail::read_value<std::uint64_t>(is, "seed");

  detail::expect_word(is, "shape");
  NetShape shape;
  shape.input = detail::read_value<int>(is, "input size");
  shape.actions = detail::read_value<int>(is, "action count");
  const int layers = detail::read_value<int>(is, "layer count");
  if (shape.input < 1 || shape.actions < 1 || layers < 0 || layers > 64) throw FormatError("params file: bad shape");
  shape.hidden.clear();
  for (int l = 0; l < layers; ++l) {
    const int h = detail::read_value<int>(is, "hidden size");
    if (h < 1 || h > 1 << 16) throw FormatError("params file: bad hidden size");
    shape.hidden.push_back(h);
  }
  PolicyParams p(shape);

  detail::expect_word(is, "normalization");
  if (detail::read_value<int>(is, "normalization size") != shape.input) throw FormatError("params file: normalization size mismatch");
  for (int i = 0; i < shape.input; ++i) {
    p.input_offset()[i] = detail::read_real(is, "offset");
    p.input_scale()[i] = detail::read_real(is, "scale");
  }
  detail::expect_word(is, "theta");
  if (detail::read_value<std::size_t>(is, "theta size") != p.size()) throw FormatError("params file: theta size does not match shape");
  for (double& v : p.theta()) v = detail::read_real(is, "weight");

  detail::expect_word(is, "template");
  const std::size_t n = detail::read_value<std::size_t>(is, "template size");
  if (n != 2 * static_cast<std::size_t>(kNumKeypoints)) throw FormatError("params file: template length must be 2K");
  s.goal.coords.resize(n);
  for (double& v : s.goal.coords) v = detail::read_real(is, "template coordinate");

  detail::expect_word(is, "config-begin");
  std::string line, body;
  std::getline(is, line);
  bool closed = false;
  while (std::getline(is, line)) {
    if (detail::trim(line) == "config-end") {
      closed = true;
      break;
    }
    body += line + '\n';
  }
  if (!closed) throw FormatError("params file: missing config-end");
  std::istringstream cs(body);
  s.config = parse_config(cs);
  s.params = std::move(p);
  return s;
}

inline void save_params(const std::string& path, const SavedPolicy& s) {
  std::ofstream os(path);
  if (!os) throw FormatError("cannot write params file '" + path + "'");
  write_params(os, s);
}

inline SavedPolicy load_params(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw FormatError("cannot open params file '" + path + "'");
  return read_params(is);
}

// ---- templates -------------------------------------------------------------

inline void write_template(std::ostream& os, const KeypointVector& k, int width_px, int height_px) {
  if (k.count() != static_cast<std::size_t>(kNumKeypoints)) throw InvalidArgument("template must hold K keypoints");
  os << kNumKeypoints << ' ' << width_px << ' ' << height_px << '\n';
  for (int i = 0; i < kNumKeypoints; ++i)
    os << kJointNames[i] << ' ' << detail::fmt_real(k.x(i)) << ' ' << detail::fmt_real(k.y(i)) << '\n';
}

struct TemplateFile {
  KeypointVector keypoints;
  int width_px = 0;
  int height_px = 0;
};

inline TemplateFile read_template(std::istream& is) {
  TemplateFile t;
  int k = 0;
  if (!(is >> k >> t.width_px >> t.height_px)) throw FormatError("template: bad header, expected 'K W H'");
  if (k != kNumKeypoints) throw FormatError("template: expected " + std::to_string(kNumKeypoints) + " keypoints");
  if (t.width_px < 1 || t.height_px < 1) throw FormatError("template: frame size must be positive");
  for (int i = 0; i < k; ++i) {
    std::string name;
    if (!(is >> name)) throw FormatError("template: missing keypoint line");
    if (name != kJointNames[i]) throw FormatError("template: expected joint '" + std::string(kJointNames[i]) + "', got '" + name + "'");
    const double x = detail::read_real(is, "x");
    const double y = detail::read_real(is, "y");
    if (x < 0 || x > t.width_px || y < 0 || y > t.height_px) throw FormatError("template: keypoint outside the frame");
    t.keypoints.coords.push_back(x);
    t.keypoints.coords.push_back(y);
  }
  return t;
}

}  // namespace photobot
