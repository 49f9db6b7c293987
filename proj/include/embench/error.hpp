#pragma once

#include <stdexcept>
#include <string>

namespace embench {

// Every failure surfaced by the library derives from Error. The category
// decides the CLI exit code.
enum class ErrorCategory {
  kValidation,  // bad input: exit 2
  kNumeric,     // numeric failure (zero variance, non-finite): exit 3
  kIo,          // file or transport failure: exit 4
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& what)
      : std::runtime_error(what), category_(category) {}

  ErrorCategory category() const noexcept { return category_; }

 private:
  ErrorCategory category_;
};

class ValidationError : public Error {
 public:
  explicit ValidationError(const std::string& what)
      : Error(ErrorCategory::kValidation, what) {}
};

// Malformed file content. Carries the offending record id when known.
class ParseError : public ValidationError {
 public:
  ParseError(const std::string& what, std::string record_id = {})
      : ValidationError(what), record_id_(std::move(record_id)) {}

  const std::string& record_id() const noexcept { return record_id_; }

 private:
  std::string record_id_;
};

class NumericError : public Error {
 public:
  explicit NumericError(const std::string& what)
      : Error(ErrorCategory::kNumeric, what) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error(ErrorCategory::kIo, what) {}
};

// Network failure that persisted through every retry.
class TransportError : public IoError {
 public:
  TransportError(const std::string& what, int attempts)
      : IoError(what), attempts_(attempts) {}

  int attempts() const noexcept { return attempts_; }

 private:
  int attempts_;
};

// The remote side answered, but not with what the protocol promises.
class ProtocolError : public IoError {
 public:
  explicit ProtocolError(const std::string& what) : IoError(what) {}
};

class NotFoundError : public ValidationError {
 public:
  explicit NotFoundError(const std::string& what) : ValidationError(what) {}
};

class ConflictError : public ValidationError {
 public:
  explicit ConflictError(const std::string& what) : ValidationError(what) {}
};

inline int exit_code_for(ErrorCategory category) {
  switch (category) {
    case ErrorCategory::kValidation:
      return 2;
    case ErrorCategory::kNumeric:
      return 3;
    case ErrorCategory::kIo:
      return 4;
  }
  return 1;
}

}  // namespace embench
