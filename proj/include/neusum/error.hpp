#pragma once

#include <stdexcept>
#include <string>

namespace neusum {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Raised on incompatible tensor shapes; the message names both shapes.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// Malformed input file. `line` is 1-based, 0 when not line oriented.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : Error(line ? what + " (line " + std::to_string(line) + ")" : what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

// Filesystem failure; carries the offending path.
class IoError : public Error {
 public:
  IoError(const std::string& what, std::string path)
      : Error(what + ": " + path), path_(std::move(path)) {}
  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

}  // namespace neusum
