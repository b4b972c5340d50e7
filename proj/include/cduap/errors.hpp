#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace cduap {

// Base of every error the library throws. The CLI maps the subclasses onto
// process exit codes (usage 2, data 3, numeric 4).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class UsageError : public Error {
 public:
  using Error::Error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

// Class-spec mini-language error; carries the offending term.
class SpecError : public UsageError {
 public:
  SpecError(const std::string& term, const std::string& why)
      : UsageError("class spec term '" + term + "': " + why), term_(term) {}
  const std::string& term() const { return term_; }

 private:
  std::string term_;
};

class DataError : public Error {
 public:
  using Error::Error;
};

class ParseError : public DataError {
 public:
  ParseError(std::size_t line, const std::string& what)
      : DataError("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class VersionError : public DataError {
 public:
  using DataError::DataError;
};

class GenerationError : public DataError {
 public:
  using DataError::DataError;
};

class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace cduap
