#pragma once

#include <stdexcept>
#include <string>

namespace osdet {

/// Base class for data errors: anything wrong with input values or files,
/// as opposed to programming errors (std::invalid_argument).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed JSON or CSV text.
class ParseError : public Error {
 public:
  using Error::Error;
};

/// Well-formed document with a missing field, wrong type or wrong arity.
class SchemaError : public Error {
 public:
  using Error::Error;
};

/// Structurally correct data that violates a value invariant
/// (invalid box, scores off the simplex, duplicate image id, ...).
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// The simulator could not satisfy its configuration.
class SimulationError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace osdet
