#pragma once

#include <stdexcept>
#include <string>

namespace dspg {

// Base for every error raised by the library. Subclasses name the failure
// class so callers (the CLI in particular) can map them to exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

class VocabularyError : public Error {
 public:
  using Error::Error;
};

class EvaluationError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  using Error::Error;
};

class ElementRejectedError : public ParseError {
 public:
  ElementRejectedError(const std::string& element)
      : ParseError("unsupported element '" + element + "' (allowed: C, N, O, S, Se, H)"),
        element_(element) {}
  const std::string& element() const { return element_; }

 private:
  std::string element_;
};

class EmptyStructureError : public ParseError {
 public:
  using ParseError::ParseError;
};

class DegenerateGeometryError : public Error {
 public:
  using Error::Error;
};

class DegenerateSurfaceError : public Error {
 public:
  using Error::Error;
};

class ArgumentError : public Error {
 public:
  using Error::Error;
};

class ContextLengthError : public Error {
 public:
  using Error::Error;
};

class DivergenceError : public Error {
 public:
  using Error::Error;
};

class FormatError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace dspg
