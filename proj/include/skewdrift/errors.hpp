#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace skewdrift {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// sigma(x) could not be inverted at the requested state.
class SingularVolatility : public Error {
 public:
  using Error::Error;
};

/// A per-coordinate quantity was requested for a model with full volatility.
class NotDiagonal : public Error {
 public:
  using Error::Error;
};

/// The semi-implicit fixed-point iterate left the finite range.
class FixedPointDivergence : public Error {
 public:
  using Error::Error;
};

class AllExploded : public Error {
 public:
  using Error::Error;
};

class ChainExploded : public Error {
 public:
  ChainExploded(const std::string& what, std::size_t step)
      : Error(what), step_index_(step) {}
  std::size_t step_index() const noexcept { return step_index_; }

 private:
  std::size_t step_index_;
};

/// Log-log fit requested on an error that is zero or negative.
class NonPositiveError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace skewdrift
