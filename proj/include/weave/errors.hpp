#pragma once

#include <cstddef>
#include <mutex>
#include <stdexcept>
#include <string>
#include <vector>

namespace weave {

/// Root of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Backend.
class TransportError : public Error { using Error::Error; };
class AuthError : public Error { using Error::Error; };
class MalformedResponse : public Error { using Error::Error; };
class UnscriptedRequest : public Error { using Error::Error; };
class DuplicateScript : public Error { using Error::Error; };

// Persistence and ingestion.
class VersionMismatch : public Error { using Error::Error; };
class CorruptFile : public Error { using Error::Error; };
class IntegrityError : public Error { using Error::Error; };

class SchemaError : public Error {
 public:
  explicit SchemaError(const std::string& what, std::size_t line = 0)
      : Error(line ? what + " (line " + std::to_string(line) + ")" : what), line_(line) {}
  /// 1-based line number of the offending input line, 0 when not line-oriented.
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

// Model replies.
class ParseError : public Error { using Error::Error; };
class MergeParseError : public ParseError { using ParseError::ParseError; };
class EmptyAbstraction : public Error { using Error::Error; };
class EmptyRevision : public Error { using Error::Error; };
class RangeError : public Error { using Error::Error; };

// Contracts.
class PrecondError : public Error { using Error::Error; };
class MismatchedPair : public Error { using Error::Error; };
class EmptyInput : public Error { using Error::Error; };
class DegenerateDesign : public Error { using Error::Error; };
class UsageError : public Error { using Error::Error; };

enum class WarningKind { Clamp, Build, Shortfall };

struct Warning {
  WarningKind kind;
  std::string message;
};

/// Non-fatal conditions collected during a run. Safe to share across threads.
class Diagnostics {
 public:
  void warn(WarningKind kind, std::string message) {
    std::lock_guard lock(mu_);
    items_.push_back({kind, std::move(message)});
  }

  std::vector<Warning> warnings() const {
    std::lock_guard lock(mu_);
    return items_;
  }

  std::size_t count(WarningKind kind) const {
    std::lock_guard lock(mu_);
    std::size_t n = 0;
    for (const auto& w : items_) n += w.kind == kind;
    return n;
  }

 private:
  mutable std::mutex mu_;
  std::vector<Warning> items_;
};

}  // namespace weave
