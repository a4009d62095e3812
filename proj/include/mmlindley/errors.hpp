#pragma once

#include <complex>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace mmlindley {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A precondition on an argument or a model instance does not hold.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

class ReducibleChainError : public InvalidArgument {
 public:
  ReducibleChainError(const std::string& what, std::vector<std::size_t> states)
      : InvalidArgument(what), unreachable_(std::move(states)) {}
  const std::vector<std::size_t>& unreachable_states() const noexcept { return unreachable_; }

 private:
  std::vector<std::size_t> unreachable_;
};

/// Evaluation of a rational function at (or numerically at) one of its poles.
class PoleError : public Error {
 public:
  PoleError(const std::string& what, std::complex<double> root) : Error(what), root_(root) {}
  std::complex<double> root() const noexcept { return root_; }

 private:
  std::complex<double> root_;
};

class SingularSystemError : public Error {
 public:
  SingularSystemError(const std::string& what, double condition) : Error(what), condition_(condition) {}
  double condition() const noexcept { return condition_; }

 private:
  double condition_;
};

/// The integrand of a winding-number computation comes too close to zero on the contour.
class ContourError : public Error {
 public:
  ContourError(const std::string& what, std::complex<double> point, double min_abs)
      : Error(what), point_(point), min_abs_(min_abs) {}
  std::complex<double> point() const noexcept { return point_; }
  double min_abs() const noexcept { return min_abs_; }

 private:
  std::complex<double> point_;
  double min_abs_;
};

class ZeroCountError : public Error {
 public:
  ZeroCountError(const std::string& what, int found, int expected)
      : Error(what), found_(found), expected_(expected) {}
  int found() const noexcept { return found_; }
  int expected() const noexcept { return expected_; }

 private:
  int found_;
  int expected_;
};

/// Null space dimension differs from one.
class RankError : public Error {
 public:
  using Error::Error;
};

class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, double last_norm) : Error(what), last_norm_(last_norm) {}
  double last_norm() const noexcept { return last_norm_; }

 private:
  double last_norm_;
};

/// The stationary regime required by a solver does not exist.
class UnstableError : public Error {
 public:
  using Error::Error;
};

}  // namespace mmlindley
