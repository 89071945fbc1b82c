#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "rdiaudit/lang_registry.hpp"
#include "rdiaudit/mention.hpp"
#include "rdiaudit/scholar_client.hpp"

namespace rdiaudit::discovery {

struct DiscoveryConfig {
  int k = 400;
  std::vector<std::string> query_terms{"corpus", "dataset", "data"};
  int workers = 4;
};

/// `"<name>" AND ("t1" OR "t2" ...)`. Throws PreconditionViolation for an
/// empty name or term list.
std::string build_query(std::string_view language_name, const std::vector<std::string>& terms);

/// One mention per distinct mention id, sorted by id. Throws
/// PreconditionViolation when `language` is not in the registry.
std::vector<CandidateMention> assemble_candidates(const lang::LanguageRegistry& registry, std::string_view language,
                                                  const std::vector<CitationContext>& contexts);

struct LanguageRun {
  std::string language;
  long papers = 0;
  long contexts = 0;
  long candidates = 0;
  std::optional<std::string> error;
};

struct DiscoveryResult {
  std::vector<CandidateMention> candidates;  // sorted by (language, mention_id)
  PaperIndex papers;                         // every paper any candidate references
  std::vector<LanguageRun> runs;             // in the order languages were given

  bool ok() const;
};

/// Runs search, expansion and assembly for each language on a bounded worker
/// pool. A failing language is reported in its LanguageRun and contributes no
/// candidates; other languages still complete.
DiscoveryResult run_discovery(ScholarClient& client, const lang::LanguageRegistry& registry,
                              const std::vector<std::string>& languages, const DiscoveryConfig& config);

/// Sorted newline-delimited exports.
std::string candidates_ndjson(const std::vector<CandidateMention>& candidates);
std::string papers_ndjson(const PaperIndex& papers);

/// Fills optional fields of `into` that `from` has and `into` lacks.
void merge_paper(PaperRef& into, const PaperRef& from);

}  // namespace rdiaudit::discovery
