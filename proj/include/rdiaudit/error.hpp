#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace rdiaudit {

enum class ErrorCode {
  // lang-registry / catalogue-ingest
  MissingFile,
  MalformedRow,
  DuplicateCode,
  NonPositivePopulation,
  DuplicateAlias,
  MalformedRecord,
  DuplicateResourceId,
  // rdi-metrics
  MissingSource,
  InvalidBins,
  // discovery / classifier transport
  PreconditionViolation,
  RateLimited,
  TransportFailure,
  MalformedResponse,
  ReplayMiss,
  EndpointUnavailable,
  SchemaViolation,
  Timeout,
  // validation-core
  UnknownMention,
  UnknownMergeTarget,
  SequenceGap,
  SequenceConflict,
  InvalidTransition,
  DanglingMerge,
  NoDecisions,
  UnknownDataset,
  // attribute-audit
  InvalidUrl,
  NoProbes,
  InconsistentAccessibility,
  // orchestration / service
  MissingPrerequisite,
  ConfigError,
  LedgerLocked,
  BindFailure,
  RevisionConflict,
  Unauthorized,
  IoError,
};

std::string_view to_string(ErrorCode code);

/// Base exception for every failure the library reports. The code is stable
/// and is what callers (CLI exit paths, HTTP error bodies, tests) switch on.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace rdiaudit
