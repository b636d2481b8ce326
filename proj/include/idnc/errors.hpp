#pragma once

#include <stdexcept>
#include <string>

namespace idnc {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Malformed input: bad dimensions, broken matrix invariants, unparsable files.
class ConfigError : public Error {
public:
  using Error::Error;
};

/// An instance is too large for an exact method (enumeration cap, MDP state cap).
class GuardExceeded : public Error {
public:
  using Error::Error;
};

/// A device has no direct link to any other device, so nothing can reach it.
class UnreachableDevice : public Error {
public:
  using Error::Error;
};

/// A runtime invariant of the simulation was broken (non-independent schedule,
/// non-monotone status matrix, probability mass not summing to one).
class InvariantViolation : public Error {
public:
  using Error::Error;
};

} // namespace idnc
