#pragma once

#include <stdexcept>
#include <string>

namespace catnet {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Arguments violate an operation's preconditions (dimensions, ranges).
class InvalidInput : public Error {
 public:
  using Error::Error;
};

/// Design matrix is rank deficient or has too few rows for the fit.
class SingularDesign : public Error {
 public:
  using Error::Error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Projected noise energy z'Pz is numerically zero.
class DegenerateNoise : public Error {
 public:
  using Error::Error;
};

/// Exact enumeration requested for too many players.
class SizeError : public Error {
 public:
  using Error::Error;
};

class DegenerateAbscissa : public Error {
 public:
  using Error::Error;
};

class DegenerateProfile : public Error {
 public:
  using Error::Error;
};

/// Training produced a non-finite loss.
class DivergenceError : public Error {
 public:
  DivergenceError(std::size_t epoch, const std::string& what)
      : Error(what), epoch_(epoch) {}
  std::size_t epoch() const noexcept { return epoch_; }

 private:
  std::size_t epoch_;
};

}  // namespace catnet
