#pragma once

#include <stdexcept>
#include <string>

namespace fvp {

// Base of everything this library throws on purpose.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DimensionMismatch : Error {
  using Error::Error;
};

struct NotPositiveDefinite : Error {
  using Error::Error;
};

struct NotElliptic : Error {
  using Error::Error;
};

struct NegativeTime : Error {
  using Error::Error;
};

// Raised when a requested value of exp(t*lambda)*x would leave the
// representable range. `index` is the offending coordinate, or -1 when the
// overflow is not attributable to a single coordinate (matrix path).
struct OverflowRisk : Error {
  long index;
  explicit OverflowRisk(const std::string& what, long idx = -1)
      : Error(what), index(idx) {}
};

struct ZeroInitialState : Error {
  using Error::Error;
};

struct GridMismatch : Error {
  using Error::Error;
};

struct NonFiniteSample : Error {
  using Error::Error;
};

struct GridNotGraded : Error {
  using Error::Error;
};

struct MissingDerivatives : Error {
  using Error::Error;
};

struct NotCompatible : Error {
  using Error::Error;
};

struct UnsupportedDomain : Error {
  using Error::Error;
};

struct TruncationTooSmall : Error {
  using Error::Error;
};

// Problem-file / flag validation failures (CLI exit code 2).
struct ConfigError : Error {
  using Error::Error;
};

}  // namespace fvp
