#include "rdiaudit/error.hpp"

namespace rdiaudit {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::MissingFile: return "MissingFile";
    case ErrorCode::MalformedRow: return "MalformedRow";
    case ErrorCode::DuplicateCode: return "DuplicateCode";
    case ErrorCode::NonPositivePopulation: return "NonPositivePopulation";
    case ErrorCode::DuplicateAlias: return "DuplicateAlias";
    case ErrorCode::MalformedRecord: return "MalformedRecord";
    case ErrorCode::DuplicateResourceId: return "DuplicateResourceId";
    case ErrorCode::MissingSource: return "MissingSource";
    case ErrorCode::InvalidBins: return "InvalidBins";
    case ErrorCode::PreconditionViolation: return "PreconditionViolation";
    case ErrorCode::RateLimited: return "RateLimited";
    case ErrorCode::TransportFailure: return "TransportFailure";
    case ErrorCode::MalformedResponse: return "MalformedResponse";
    case ErrorCode::ReplayMiss: return "ReplayMiss";
    case ErrorCode::EndpointUnavailable: return "EndpointUnavailable";
    case ErrorCode::SchemaViolation: return "SchemaViolation";
    case ErrorCode::Timeout: return "Timeout";
    case ErrorCode::UnknownMention: return "UnknownMention";
    case ErrorCode::UnknownMergeTarget: return "UnknownMergeTarget";
    case ErrorCode::SequenceGap: return "SequenceGap";
    case ErrorCode::SequenceConflict: return "SequenceConflict";
    case ErrorCode::InvalidTransition: return "InvalidTransition";
    case ErrorCode::DanglingMerge: return "DanglingMerge";
    case ErrorCode::NoDecisions: return "NoDecisions";
    case ErrorCode::UnknownDataset: return "UnknownDataset";
    case ErrorCode::InvalidUrl: return "InvalidUrl";
    case ErrorCode::NoProbes: return "NoProbes";
    case ErrorCode::InconsistentAccessibility: return "InconsistentAccessibility";
    case ErrorCode::MissingPrerequisite: return "MissingPrerequisite";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::LedgerLocked: return "LedgerLocked";
    case ErrorCode::BindFailure: return "BindFailure";
    case ErrorCode::RevisionConflict: return "RevisionConflict";
    case ErrorCode::Unauthorized: return "Unauthorized";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

}  // namespace rdiaudit
