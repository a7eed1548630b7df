#pragma once

#include <stdexcept>
#include <string>

namespace factcheck {

// Base class for every error raised by this library.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& message) : std::runtime_error(message) {}
};

// --- core ---

class UnknownLabelError : public Error {
 public:
  explicit UnknownLabelError(const std::string& name)
      : Error("unknown label: \"" + name + "\""), name_(name) {}
  const std::string& name() const { return name_; }

 private:
  std::string name_;
};

class OutOfRangeError : public Error {
 public:
  using Error::Error;
};

// --- dataset-io ---

class MalformedRowError : public Error {
 public:
  MalformedRowError(std::size_t row, const std::string& detail)
      : Error("malformed row " + std::to_string(row) + ": " + detail), row_(row) {}
  std::size_t row() const { return row_; }

 private:
  std::size_t row_;
};

class DuplicateIdError : public Error {
 public:
  explicit DuplicateIdError(const std::string& id)
      : Error("duplicate id: \"" + id + "\""), id_(id) {}
  const std::string& id() const { return id_; }

 private:
  std::string id_;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// --- backend ---

// Network-level or 5xx failure; retryable.
class TransportError : public Error {
 public:
  using Error::Error;
};

// Credential rejected; never retried.
class AuthError : public Error {
 public:
  using Error::Error;
};

// HTTP 429; retryable with backoff.
class RateLimitedError : public Error {
 public:
  using Error::Error;
};

// Global call-count cap hit; aborts the whole batch.
class BudgetExceededError : public Error {
 public:
  using Error::Error;
};

// --- evaluation ---

class UnknownIdError : public Error {
 public:
  explicit UnknownIdError(const std::string& id)
      : Error("prediction id not present in gold dataset: \"" + id + "\""), id_(id) {}
  const std::string& id() const { return id_; }

 private:
  std::string id_;
};

class MissingGoldError : public Error {
 public:
  using Error::Error;
};

// --- cli / config ---

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace factcheck
