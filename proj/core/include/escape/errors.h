#pragma once

#include <stdexcept>
#include <string>

namespace escape {

// Base class for every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// A value fell outside the robot's motion limits.
class RangeError : public Error {
 public:
  using Error::Error;
};

// A pose is not admissible for the requested operation (e.g. sensor origin
// inside an obstacle).
class InvalidPose : public Error {
 public:
  using Error::Error;
};

// Malformed scenario, trace or protocol text. `line` is 1-based, 0 when the
// position is unknown.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, int line = 0)
      : Error(line > 0 ? "line " + std::to_string(line) + ": " + what : what),
        line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

class StateError : public Error {
 public:
  using Error::Error;
};

}  // namespace escape
