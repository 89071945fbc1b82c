#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace rdiaudit {

struct PaperRef {
  std::string paper_id;
  std::string title;
  std::optional<int> year;
  std::optional<std::string> venue;
  std::optional<std::string> abstract;

  bool operator==(const PaperRef&) const = default;
};

/// OUTGOING: the retrieved paper cites the dataset paper. INCOMING: another
/// paper cites the retrieved (dataset-creation) paper.
enum class Direction { Outgoing, Incoming };

struct CitationContext {
  PaperRef citing;
  PaperRef cited;
  std::string context_text;
  Direction direction = Direction::Outgoing;
};

enum class Backend { Llm, Heuristic };

struct ClassifierVerdict {
  bool is_dataset = false;
  std::optional<std::string> extracted_name;  // only when is_dataset
  std::optional<std::string> rationale;
  Backend backend = Backend::Heuristic;
  std::string context_digest;
  std::optional<double> confidence;

  bool operator==(const ClassifierVerdict&) const = default;
};

struct CandidateMention {
  std::string mention_id;
  std::string language;  // ISO 639-3
  CitationContext context;
  std::optional<std::string> extracted_name;
  std::optional<ClassifierVerdict> verdict;
};

using PaperIndex = std::map<std::string, PaperRef, std::less<>>;

std::string_view to_string(Direction d);
std::optional<Direction> direction_from_string(std::string_view s);
std::string_view to_string(Backend b);

/// 16 hex chars of SHA-256 over the context text.
std::string context_digest(std::string_view context_text);

/// Deterministic id over (language, citing id, cited id, context digest).
std::string make_mention_id(std::string_view language, std::string_view citing_id, std::string_view cited_id,
                            std::string_view context_text);

nlohmann::json paper_to_json(const PaperRef& p);
PaperRef paper_from_json(const nlohmann::json& j);

nlohmann::json verdict_to_json(const ClassifierVerdict& v);
ClassifierVerdict verdict_from_json(const nlohmann::json& j);

/// Candidate export record `{mention_id, language, citing, cited, context,
/// direction}`; papers are referenced by id.
nlohmann::json candidate_to_record(const CandidateMention& m);
/// Resolves paper ids through `papers`; throws MalformedRecord for unknown ids.
CandidateMention candidate_from_record(const nlohmann::json& j, const PaperIndex& papers);

/// Newline-delimited JSON helpers. Blank lines are skipped.
std::vector<nlohmann::json> parse_ndjson(std::string_view text);
std::string to_ndjson(const std::vector<nlohmann::json>& records);

}  // namespace rdiaudit
