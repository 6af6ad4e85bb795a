#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace fusegraph {

enum class ErrorCode {
  DuplicateId,
  EmptyContent,
  InvalidTimestamp,
  UnknownEndpoint,
  SelfLoop,
  DuplicateEdge,
  UnknownNode,
  TooFewNodes,
  RemoteUnavailable,
  DimensionMismatch,
  MissingEmbedding,
  MissingSignature,
  InvalidArgument,
  EmptyInput,
  IndexNotBuilt,
  EmptyQuery,
  UnresolvableIntent,
  ParseError,
  ConfigError,
  SnapshotCorrupt,
  BindFailure,
  Busy,
  UnknownSuite,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::DuplicateId: return "DuplicateId";
    case ErrorCode::EmptyContent: return "EmptyContent";
    case ErrorCode::InvalidTimestamp: return "InvalidTimestamp";
    case ErrorCode::UnknownEndpoint: return "UnknownEndpoint";
    case ErrorCode::SelfLoop: return "SelfLoop";
    case ErrorCode::DuplicateEdge: return "DuplicateEdge";
    case ErrorCode::UnknownNode: return "UnknownNode";
    case ErrorCode::TooFewNodes: return "TooFewNodes";
    case ErrorCode::RemoteUnavailable: return "RemoteUnavailable";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::MissingEmbedding: return "MissingEmbedding";
    case ErrorCode::MissingSignature: return "MissingSignature";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::IndexNotBuilt: return "IndexNotBuilt";
    case ErrorCode::EmptyQuery: return "EmptyQuery";
    case ErrorCode::UnresolvableIntent: return "UnresolvableIntent";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::SnapshotCorrupt: return "SnapshotCorrupt";
    case ErrorCode::BindFailure: return "BindFailure";
    case ErrorCode::Busy: return "Busy";
    case ErrorCode::UnknownSuite: return "UnknownSuite";
  }
  return "Unknown";
}

/// Every failure surfaced by the library carries one of the codes above so
/// that the CLI and HTTP layers can report it by name.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message),
        code_(code),
        detail_(message) {}

  ErrorCode code() const noexcept { return code_; }
  std::string_view code_name() const noexcept { return to_string(code_); }
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  std::string detail_;
};

/// Ingestion failure tied to a 1-based line of a JSONL input.
class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& reason)
      : Error(ErrorCode::ParseError, "line " + std::to_string(line) + ": " + reason),
        line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace fusegraph
