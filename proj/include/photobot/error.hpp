#pragma once

#include <stdexcept>
#include <string>

namespace photobot {

// Error categories surfaced by the library. Everything derives from
// std::runtime_error or std::invalid_argument so callers that only care
// about "something failed" can catch the std base.

struct InvalidArgument : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct DegenerateGeometry : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// step() called on a finished episode, or before reset().
struct ProtocolViolation : std::logic_error {
  using std::logic_error::logic_error;
};

struct TrainingDivergence : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NoPath : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NoCandidates : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Malformed config, params, template or scenario file.
struct FormatError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace photobot
