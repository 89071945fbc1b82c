#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace rdiaudit::lang {

struct LanguageRecord {
  std::string iso639_3;
  std::string canonical_name;
  double population_millions = 0.0;
  std::vector<std::string> aliases;
};

/// Immutable set of languages keyed by ISO 639-3 code. Canonical names and
/// aliases are matched case-insensitively and must be unique across records.
class LanguageRegistry {
 public:
  LanguageRegistry() = default;
  /// Throws DuplicateCode, NonPositivePopulation, DuplicateAlias, MalformedRow.
  explicit LanguageRegistry(std::vector<LanguageRecord> records);

  /// Parses `iso639_3,name,population_millions[,aliases]` with a header row.
  /// Aliases are separated by ';'. The whole file is rejected on any error.
  static LanguageRegistry parse(std::string_view text);
  static LanguageRegistry load(const std::filesystem::path& path);

  const LanguageRecord* find(std::string_view iso639_3) const;
  bool contains(std::string_view iso639_3) const { return find(iso639_3) != nullptr; }
  /// Code whose canonical name or alias equals the case-folded label.
  std::optional<std::string> match_name(std::string_view folded_label) const;

  const std::vector<LanguageRecord>& records() const { return records_; }
  std::size_t size() const { return records_.size(); }

 private:
  std::vector<LanguageRecord> records_;
  std::map<std::string, std::size_t, std::less<>> by_code_;
  std::map<std::string, std::string, std::less<>> by_name_;
};

enum class RuleAction { MapTo, KeepBroad };

struct NormalizationRule {
  std::string source_label;
  RuleAction action = RuleAction::MapTo;
  std::string target;  // ISO 639-3 code for MapTo, empty for KeepBroad
  std::string note;
  std::size_t line = 0;
};

/// Rules file: `source_label<TAB>action<TAB>target<TAB>note`, '#' comments.
/// A `# version: X` comment sets the rule-set version string.
struct RuleSet {
  std::vector<NormalizationRule> rules;
  std::string version;

  static RuleSet parse(std::string_view text);
  static RuleSet load(const std::filesystem::path& path);
};

enum class RuleErrorKind { UnknownTarget, DuplicateSource };

struct RuleError {
  RuleErrorKind kind;
  std::string source_label;
  std::string detail;
  std::size_t line = 0;
};

std::string_view to_string(RuleErrorKind kind);

/// Empty iff every MapTo target exists in `registry` and no two rules share a
/// case-folded source label.
std::vector<RuleError> validate_rules(const RuleSet& rules, const LanguageRegistry& registry);

struct NormalizationOutcome {
  enum class Kind { Mapped, Broad, Unmapped };
  Kind kind = Kind::Unmapped;
  std::string code;   // set for Mapped
  std::string label;  // the raw label, verbatim

  bool operator==(const NormalizationOutcome&) const = default;
};

std::string_view to_string(NormalizationOutcome::Kind kind);

/// Label normalizer built from a registry and a validated rule set. Lookup
/// order: case-fold, exact name/alias match, then rule lookup.
class Normalizer {
 public:
  Normalizer() = default;
  /// Throws Error(ConfigError) when validate_rules reports problems.
  Normalizer(const LanguageRegistry& registry, const RuleSet& rules);

  NormalizationOutcome normalize(std::string_view raw) const;

 private:
  std::map<std::string, std::string, std::less<>> names_;
  std::map<std::string, NormalizationRule, std::less<>> rules_;
};

NormalizationOutcome normalize_label(std::string_view raw, const RuleSet& rules,
                                     const LanguageRegistry& registry);

}  // namespace rdiaudit::lang
