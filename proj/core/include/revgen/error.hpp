#pragma once

#include <stdexcept>
#include <string>

namespace revgen {

// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Dimension mismatch between tensors (message names both shapes).
class ShapeError : public Error {
 public:
  using Error::Error;
};

// Index outside a container's valid range.
class IndexError : public Error {
 public:
  using Error::Error;
};

// Input value violates a documented precondition.
class ValidationError : public Error {
 public:
  using Error::Error;
};

// Malformed input data (bad line, missing field, bad number).
class ParseError : public Error {
 public:
  using Error::Error;
};

// File could not be opened, read or written.
class IoError : public Error {
 public:
  using Error::Error;
};

// A looked-up key (user, item, epoch) does not exist.
class NotFoundError : public Error {
 public:
  using Error::Error;
};

// Checkpoint carries an unsupported format version.
class VersionError : public Error {
 public:
  using Error::Error;
};

// Checkpoint bytes fail the integrity check.
class IntegrityError : public Error {
 public:
  using Error::Error;
};

}  // namespace revgen
