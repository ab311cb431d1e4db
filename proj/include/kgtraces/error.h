#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace kgtraces {

// Base for every error the library raises.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Precondition violated by the caller (bad sizes, negative losses, empty inputs).
class ArgumentError : public Error {
 public:
  using Error::Error;
};

// Malformed input text. `line` is 1-based, 0 when not line oriented.
class ParseError : public Error {
 public:
  ParseError(const std::string& message, std::size_t line = 0)
      : Error(line == 0 ? message : "line " + std::to_string(line) + ": " + message), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

// A triple sequence whose tail/head entities do not chain.
class LinkError : public Error {
 public:
  explicit LinkError(std::size_t index)
      : Error("broken chain at triple index " + std::to_string(index)), index_(index) {}
  std::size_t index() const noexcept { return index_; }

 private:
  std::size_t index_;
};

// A triple sequence that revisits an entity.
class CycleError : public Error {
 public:
  CycleError(std::string entity, std::size_t index)
      : Error("entity '" + entity + "' repeated at triple index " + std::to_string(index)),
        entity_(std::move(entity)),
        index_(index) {}
  const std::string& entity() const noexcept { return entity_; }
  std::size_t index() const noexcept { return index_; }

 private:
  std::string entity_;
  std::size_t index_;
};

class DivergenceError : public Error {
 public:
  using Error::Error;
};

class JudgeError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace kgtraces
