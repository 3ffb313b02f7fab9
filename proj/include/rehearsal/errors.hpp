#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>

namespace rehearsal {

/// Base class for all library errors.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Malformed model output or a malformed persisted record.
class ParseError : public Error {
public:
  explicit ParseError(const std::string& what) : Error(what) {}
  ParseError(const std::string& what, std::size_t line)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}

  std::optional<std::size_t> line() const { return line_; }

private:
  std::optional<std::size_t> line_;
};

/// A template was rendered without one of its required slots.
class RenderError : public Error {
public:
  RenderError(const std::string& what, std::string slot)
      : Error(what), slot_(std::move(slot)) {}

  const std::string& slot() const { return slot_; }

private:
  std::string slot_;
};

/// Non-transient backend failure that survived the retry budget.
class GatewayError : public Error {
public:
  using Error::Error;
};

/// Bad wiring: unknown role, unreadable config, scripted call with no rule.
class ConfigError : public Error {
public:
  using Error::Error;
};

/// Caller violated a documented precondition.
class PreconditionError : public Error {
public:
  using Error::Error;
};

namespace detail {

// Internal markers thrown by backends; the gateway translates them.
class TransientError : public Error {
public:
  using Error::Error;
};

class ContextLengthError : public Error {
public:
  using Error::Error;
};

}  // namespace detail

}  // namespace rehearsal
