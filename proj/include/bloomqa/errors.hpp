#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>

namespace bloomqa {

// Base for every error the library throws on purpose. Programming errors
// (broken preconditions) use std::invalid_argument / std::out_of_range.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NameNotFound : public Error {
 public:
  using Error::Error;
};

class UndefinedProximalContext : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class SchemaError : public Error {
 public:
  SchemaError(std::size_t line, std::string field, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line), field_(std::move(field)) {}
  std::size_t line() const noexcept { return line_; }
  const std::string& field() const noexcept { return field_; }

 private:
  std::size_t line_;
  std::string field_;
};

// Transport failure after the retry budget is spent.
class BackendUnavailable : public Error {
 public:
  using Error::Error;
};

// The backend answered but gave no usable token log-probabilities.
class TokenizationFailure : public Error {
 public:
  using Error::Error;
};

class NoClarificationAtLevel : public Error {
 public:
  using Error::Error;
};

class EmptyClarificationSet : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class EvalAborted : public Error {
 public:
  using Error::Error;
};

}  // namespace bloomqa
