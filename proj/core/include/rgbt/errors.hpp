#pragma once

#include <stdexcept>
#include <string>

namespace rgbt {

/// Base class for every error thrown by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Tensor or box extents do not conform.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// A numeric value violates a precondition (non-finite, negative loss, ...).
class ValueError : public Error {
 public:
  using Error::Error;
};

/// Unknown key in a registry lookup.
class LookupError : public Error {
 public:
  using Error::Error;
};

/// Malformed file content. Messages carry file and line where known.
class ParseError : public Error {
 public:
  using Error::Error;
};

/// Dataset or evaluation contract violation (missing files, misaligned tracks).
class ProtocolError : public Error {
 public:
  using Error::Error;
};

/// Degenerate geometry (singular homography, point at infinity).
class GeometryError : public Error {
 public:
  using Error::Error;
};

/// Invalid run configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Filesystem failure.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace rgbt
