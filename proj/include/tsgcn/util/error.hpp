#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace tsgcn {

/// Base of every error thrown by the library. The CLI maps these to exit code 3.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A caller broke an operation's precondition (shape mismatch, bad label, K >= M, ...).
class ContractError : public Error {
 public:
  using Error::Error;
};

/// NaN or Inf observed at an op boundary.
class NumericError : public Error {
 public:
  using Error::Error;
};

class DegenerateGeometryError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& source, std::size_t line, const std::string& what)
      : Error(source + ":" + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Decimation stopped before reaching the requested face count.
class DecimationError : public Error {
 public:
  DecimationError(std::size_t achieved, std::size_t target)
      : Error("decimation stalled at " + std::to_string(achieved) + " faces (target " +
              std::to_string(target) + "): no remaining collapse passes the topology guard"),
        achieved_(achieved) {}

  std::size_t achieved() const noexcept { return achieved_; }

 private:
  std::size_t achieved_;
};

inline void require(bool condition, const std::string& message) {
  if (!condition) throw ContractError(message);
}

}  // namespace tsgcn
