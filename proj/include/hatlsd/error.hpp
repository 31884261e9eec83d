#pragma once

#include <stdexcept>
#include <string>

namespace hatlsd {

/// Base for every error raised by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// File could not be opened, read or written.
class IoError : public Error {
 public:
  using Error::Error;
};

/// Bytes or text that do not follow the expected layout.
class FormatError : public Error {
 public:
  using Error::Error;
};

/// Degenerate or out-of-domain geometry (points at infinity, zero-length
/// segments, singular homographies).
class GeometryError : public Error {
 public:
  using Error::Error;
};

/// A parameter block violates its documented invariants.
class ParamError : public Error {
 public:
  using Error::Error;
};

}  // namespace hatlsd
