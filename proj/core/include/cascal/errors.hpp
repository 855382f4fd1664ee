#pragma once

#include <stdexcept>
#include <string>

namespace cascal {

enum class ErrorKind {
  InvalidInput,   // violated precondition or malformed in-memory data
  JoinError,      // sample_id mismatch between stage files
  ConsistencyError, // cross-source disagreement (labels, class counts)
  ValidationError,  // file-level content failures (bad sums, ranges, headers)
  IoError,        // filesystem failures
};

const char* error_kind_name(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }
  const char* kind_name() const noexcept { return error_kind_name(kind_); }

 private:
  ErrorKind kind_;
};

struct InvalidInput : Error {
  explicit InvalidInput(const std::string& m) : Error(ErrorKind::InvalidInput, m) {}
};
struct JoinError : Error {
  explicit JoinError(const std::string& m) : Error(ErrorKind::JoinError, m) {}
};
struct ConsistencyError : Error {
  explicit ConsistencyError(const std::string& m) : Error(ErrorKind::ConsistencyError, m) {}
};
struct ValidationError : Error {
  explicit ValidationError(const std::string& m) : Error(ErrorKind::ValidationError, m) {}
};
struct IoError : Error {
  explicit IoError(const std::string& m) : Error(ErrorKind::IoError, m) {}
};

}  // namespace cascal
