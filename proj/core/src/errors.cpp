#include "cascal/errors.hpp"

namespace cascal {

const char* error_kind_name(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidInput: return "InvalidInput";
    case ErrorKind::JoinError: return "JoinError";
    case ErrorKind::ConsistencyError: return "ConsistencyError";
    case ErrorKind::ValidationError: return "ValidationError";
    case ErrorKind::IoError: return "IoError";
  }
  return "Error";
}

}  // namespace cascal
