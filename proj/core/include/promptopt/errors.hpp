#pragma once

#include <stdexcept>
#include <string>

namespace promptopt {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A configuration value violates its constraint. `field()` names the offender.
class ConfigError : public Error {
 public:
  ConfigError(std::string field, const std::string& constraint);
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  ParseError(std::size_t line, std::string reason);
  std::size_t line() const noexcept { return line_; }
  const std::string& reason() const noexcept { return reason_; }

 private:
  std::size_t line_;
  std::string reason_;
};

class EmptyInput : public Error {
 public:
  using Error::Error;
};

class TooFewSessions : public Error {
 public:
  using Error::Error;
};

class PoolTooSmall : public Error {
 public:
  using Error::Error;
};

class EmptyPrompt : public Error {
 public:
  using Error::Error;
};

// Base of everything a chat backend can raise. The optimizer attaches the
// session being evaluated when the failure surfaces inside a batch.
class BackendError : public Error {
 public:
  using Error::Error;
  const std::string& session_id() const noexcept { return session_id_; }
  void set_session_id(std::string id) { session_id_ = std::move(id); }

 private:
  std::string session_id_;
};

class TransportError : public BackendError {
 public:
  using BackendError::BackendError;
};

class AuthError : public BackendError {
 public:
  using BackendError::BackendError;
};

class BudgetExceeded : public BackendError {
 public:
  using BackendError::BackendError;
};

}  // namespace promptopt
