#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace edgelab {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// A graph signal is one real value per node.
using GraphSignal = Vector;

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad argument: wrong dimensions, out-of-range probability, wrong filter class.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// API misuse, e.g. calling backward without a forward cache.
class UsageError : public Error {
 public:
  using Error::Error;
};

/// Rejection sampling never produced a connected graph.
class DisconnectedGraphError : public Error {
 public:
  explicit DisconnectedGraphError(int retries)
      : Error("graph still disconnected after " + std::to_string(retries) + " attempts"),
        retries_(retries) {}
  int retries() const noexcept { return retries_; }

 private:
  int retries_;
};

/// Malformed input file; carries the 1-based line number.
class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

inline void require(bool condition, const std::string& message) {
  if (!condition) throw ValidationError(message);
}

}  // namespace edgelab
