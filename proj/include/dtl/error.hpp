#pragma once

#include <stdexcept>
#include <string>

namespace dtl {

/// Base of every error thrown by the library. `category()` is a stable,
/// machine-parseable token used by the CLI on its one-line error report.
class Error : public std::runtime_error {
 public:
  Error(std::string category, const std::string& what)
      : std::runtime_error(what), category_(std::move(category)) {}

  const std::string& category() const noexcept { return category_; }

 private:
  std::string category_;
};

class ShapeError : public Error {
 public:
  explicit ShapeError(const std::string& what) : Error("shape", what) {}
};

class InvalidArgument : public Error {
 public:
  explicit InvalidArgument(const std::string& what) : Error("invalid-argument", what) {}
};

/// The confusion matrix has an all-zero diagonal; no recall/precision
/// assignment exists. Callers map this to a zero filter cost.
class DegenerateEvidence : public Error {
 public:
  explicit DegenerateEvidence(const std::string& what) : Error("degenerate-evidence", what) {}
};

class IdxError : public Error {
 public:
  enum class Kind { io, bad_magic, dimension_mismatch, truncated, count_mismatch };

  IdxError(Kind kind, const std::string& what) : Error(category_for(kind), what), kind_(kind) {}

  Kind kind() const noexcept { return kind_; }

 private:
  static std::string category_for(Kind kind) {
    switch (kind) {
      case Kind::io: return "idx-io";
      case Kind::bad_magic: return "idx-bad-magic";
      case Kind::dimension_mismatch: return "idx-dimension-mismatch";
      case Kind::truncated: return "idx-truncated";
      case Kind::count_mismatch: return "idx-count-mismatch";
    }
    return "idx";
  }

  Kind kind_;
};

class CheckpointError : public Error {
 public:
  enum class Kind { io, version_mismatch, corrupt_payload, architecture_mismatch };

  CheckpointError(Kind kind, const std::string& what) : Error(category_for(kind), what), kind_(kind) {}

  Kind kind() const noexcept { return kind_; }

 private:
  static std::string category_for(Kind kind) {
    switch (kind) {
      case Kind::io: return "checkpoint-io";
      case Kind::version_mismatch: return "checkpoint-version-mismatch";
      case Kind::corrupt_payload: return "checkpoint-corrupt-payload";
      case Kind::architecture_mismatch: return "checkpoint-architecture-mismatch";
    }
    return "checkpoint";
  }

  Kind kind_;
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error("config", what) {}
};

class DatasetError : public Error {
 public:
  explicit DatasetError(const std::string& what) : Error("dataset", what) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error("io", what) {}
};

}  // namespace dtl
