#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "rdiaudit/lang_registry.hpp"

namespace rdiaudit::catalogue {

enum class Source { LreMap, Ldc };

std::string_view to_string(Source source);
std::optional<Source> source_from_string(std::string_view s);

struct CatalogueEntry {
  Source source = Source::LreMap;
  std::string resource_id;
  std::vector<std::string> raw_language_labels;
  std::string resource_name;
  std::string resource_type;
  std::optional<int> year;
  std::size_t line = 0;
};

/// Parses one catalogue export.
///
/// LRE Map schema: `resource_id,resource_name,resource_type,languages,year`.
/// LDC schema:     `catalog_id,title,language,release_year,type`.
/// In both, the language column may carry several labels separated by ';'.
/// Throws MalformedRecord (with line) or DuplicateResourceId.
std::vector<CatalogueEntry> parse_catalogue(std::string_view text, Source source);
std::vector<CatalogueEntry> load_catalogue(const std::filesystem::path& path, Source source);

struct ExceptionRow {
  Source source;
  std::string resource_id;
  lang::NormalizationOutcome::Kind kind;
  std::string label;

  bool operator==(const ExceptionRow&) const = default;
};

struct CatalogueCounts {
  std::map<std::pair<std::string, Source>, long> counts;
  std::vector<ExceptionRow> exceptions;

  long count(std::string_view iso639_3, Source source) const;
};

struct CountOptions {
  /// Resource types to keep (case-insensitive). Empty keeps everything.
  std::set<std::string> types;
};

/// A resource adds at most one to each language it maps to. Broad and
/// unmapped labels add nothing and are reported in `exceptions`.
CatalogueCounts count_by_language(std::span<const CatalogueEntry> entries, const lang::Normalizer& normalizer,
                                  const CountOptions& options = {});
CatalogueCounts count_by_language(std::span<const CatalogueEntry> entries, const lang::LanguageRegistry& registry,
                                  const lang::RuleSet& rules, const CountOptions& options = {});

/// `iso639_3,source,count`, one row per registry language and source.
void write_counts_csv(std::ostream& out, const CatalogueCounts& counts, const lang::LanguageRegistry& registry);
/// `source,resource_id,outcome,label`.
void write_exceptions_csv(std::ostream& out, const CatalogueCounts& counts);
CatalogueCounts read_counts_csv(std::string_view text);

}  // namespace rdiaudit::catalogue
