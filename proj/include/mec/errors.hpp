#pragma once

#include <stdexcept>
#include <string>

namespace mec {

// Error categories shared by loaders, clustering, and metrics. The CLI maps
// every category except `internal` to exit code 1.
enum class ErrorKind {
  parse,                 // malformed JSON / unreadable syntax
  schema,                // well-formed input violating a documented invariant
  format,                // bad magic / version / dtype in a binary container
  truncation,            // binary payload shorter than the header promises
  value,                 // non-finite or out-of-range numeric payload
  consistency,           // cross-file shape or id mismatch in a bundle
  io,                    // unreadable / unwritable path
  domain,                // operands cover different universes
  unknown_verb,          // verb missing from the verb-role map
  degenerate_embedding,  // zero-norm embedding row
  degenerate_cluster,    // empty cluster where a non-empty one is required
  index,                 // reference to a row/column outside a matrix
  internal,              // bug; maps to exit code 2
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, std::string message)
      : std::runtime_error(std::move(message)), kind_(kind) {}

  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

inline const char* error_kind_name(ErrorKind k) {
  switch (k) {
    case ErrorKind::parse: return "ParseError";
    case ErrorKind::schema: return "SchemaError";
    case ErrorKind::format: return "FormatError";
    case ErrorKind::truncation: return "TruncationError";
    case ErrorKind::value: return "ValueError";
    case ErrorKind::consistency: return "ConsistencyError";
    case ErrorKind::io: return "IoError";
    case ErrorKind::domain: return "DomainError";
    case ErrorKind::unknown_verb: return "UnknownVerb";
    case ErrorKind::degenerate_embedding: return "DegenerateEmbedding";
    case ErrorKind::degenerate_cluster: return "DegenerateCluster";
    case ErrorKind::index: return "IndexError";
    case ErrorKind::internal: return "InternalError";
  }
  return "Error";
}

[[noreturn]] inline void raise(ErrorKind kind, const std::string& message) {
  throw Error(kind, std::string(error_kind_name(kind)) + ": " + message);
}

}  // namespace mec
