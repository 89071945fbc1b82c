#include "rdiaudit/lang_registry.hpp"

#include <algorithm>
#include <charconv>

#include "rdiaudit/error.hpp"
#include "rdiaudit/util/csv.hpp"
#include "rdiaudit/util/files.hpp"
#include "rdiaudit/util/text.hpp"

namespace rdiaudit::lang {

namespace {

bool is_iso639_3(std::string_view code) {
  if (code.size() != 3) return false;
  for (char c : code) {
    if (c < 'a' || c > 'z') return false;
  }
  return true;
}

std::optional<double> parse_decimal(std::string_view s) {
  s = text::trim(s);
  double v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

std::string_view action_name(RuleAction a) { return a == RuleAction::MapTo ? "MAP_TO" : "KEEP_BROAD"; }

}  // namespace

LanguageRegistry::LanguageRegistry(std::vector<LanguageRecord> records) : records_(std::move(records)) {
  for (std::size_t i = 0; i < records_.size(); ++i) {
    const auto& r = records_[i];
    if (!is_iso639_3(r.iso639_3)) {
      throw Error(ErrorCode::MalformedRow, "invalid ISO 639-3 code '" + r.iso639_3 + "'");
    }
    if (r.canonical_name.empty()) {
      throw Error(ErrorCode::MalformedRow, "empty canonical name for " + r.iso639_3);
    }
    if (!(r.population_millions > 0.0)) {
      throw Error(ErrorCode::NonPositivePopulation, r.iso639_3);
    }
    if (!by_code_.emplace(r.iso639_3, i).second) {
      throw Error(ErrorCode::DuplicateCode, r.iso639_3);
    }
    auto add_name = [&](const std::string& name) {
      auto folded = text::casefold(text::trim(name));
      if (folded.empty()) return;
      auto [it, inserted] = by_name_.emplace(folded, r.iso639_3);
      if (!inserted && it->second != r.iso639_3) {
        throw Error(ErrorCode::DuplicateAlias,
                    "label '" + name + "' names both " + it->second + " and " + r.iso639_3);
      }
    };
    add_name(r.canonical_name);
    for (const auto& a : r.aliases) add_name(a);
  }
}

LanguageRegistry LanguageRegistry::parse(std::string_view text) {
  auto table = csv::Table::from_rows(csv::parse(text, ',', true));
  if (table.header().empty()) return LanguageRegistry{};

  auto code_col = table.column("iso639_3");
  if (!code_col) code_col = table.column("code");
  auto name_col = table.column("name");
  auto pop_col = table.column("population_millions");
  auto alias_col = table.column("aliases");
  if (!code_col || !name_col || !pop_col) {
    throw Error(ErrorCode::MalformedRow,
                "line 1: header must contain iso639_3,name,population_millions");
  }

  std::vector<LanguageRecord> records;
  for (const auto& row : table.rows()) {
    const auto need = std::max({*code_col, *name_col, *pop_col}) + 1;
    if (row.fields.size() < need) {
      throw Error(ErrorCode::MalformedRow, "line " + std::to_string(row.line) + ": expected at least " +
                                               std::to_string(need) + " columns");
    }
    LanguageRecord rec;
    rec.iso639_3 = std::string(text::trim(row.fields[*code_col]));
    rec.canonical_name = std::string(text::trim(row.fields[*name_col]));
    if (!is_iso639_3(rec.iso639_3) || rec.canonical_name.empty()) {
      throw Error(ErrorCode::MalformedRow, "line " + std::to_string(row.line) + ": bad code or name");
    }
    auto pop = parse_decimal(row.fields[*pop_col]);
    if (!pop) {
      throw Error(ErrorCode::MalformedRow,
                  "line " + std::to_string(row.line) + ": population is not a number");
    }
    rec.population_millions = *pop;
    if (!(rec.population_millions > 0.0)) throw Error(ErrorCode::NonPositivePopulation, rec.iso639_3);
    if (alias_col && *alias_col < row.fields.size()) {
      for (auto& a : text::split(row.fields[*alias_col], ';')) {
        auto t = text::trim(a);
        if (!t.empty()) rec.aliases.emplace_back(t);
      }
    }
    records.push_back(std::move(rec));
  }
  return LanguageRegistry(std::move(records));
}

LanguageRegistry LanguageRegistry::load(const std::filesystem::path& path) {
  if (!files::exists(path)) throw Error(ErrorCode::MissingFile, path.string());
  return parse(files::read_text(path));
}

const LanguageRecord* LanguageRegistry::find(std::string_view iso639_3) const {
  auto it = by_code_.find(iso639_3);
  return it == by_code_.end() ? nullptr : &records_[it->second];
}

std::optional<std::string> LanguageRegistry::match_name(std::string_view folded_label) const {
  auto it = by_name_.find(folded_label);
  if (it == by_name_.end()) return std::nullopt;
  return it->second;
}

RuleSet RuleSet::parse(std::string_view text_in) {
  RuleSet set;
  std::size_t line_no = 0;
  for (const auto& raw_line : text::split(text_in, '\n')) {
    ++line_no;
    auto line = text::trim(raw_line);
    if (line.empty()) continue;
    if (line.front() == '#') {
      auto body = text::trim(line.substr(1));
      constexpr std::string_view kVersion = "version:";
      if (body.substr(0, kVersion.size()) == kVersion) {
        set.version = std::string(text::trim(body.substr(kVersion.size())));
      }
      continue;
    }
    // Keep empty trailing columns: split the untrimmed line on tabs.
    auto cols = text::split(text::trim(std::string_view(raw_line)), '\t');
    if (cols.size() < 2) {
      throw Error(ErrorCode::MalformedRow, "rules line " + std::to_string(line_no) +
                                               ": expected source_label<TAB>action<TAB>target<TAB>note");
    }
    NormalizationRule rule;
    rule.line = line_no;
    rule.source_label = std::string(text::trim(cols[0]));
    auto action = text::trim(cols[1]);
    if (action == "MAP_TO") {
      rule.action = RuleAction::MapTo;
    } else if (action == "KEEP_BROAD") {
      rule.action = RuleAction::KeepBroad;
    } else {
      throw Error(ErrorCode::MalformedRow,
                  "rules line " + std::to_string(line_no) + ": unknown action '" + std::string(action) + "'");
    }
    if (cols.size() > 2) rule.target = std::string(text::trim(cols[2]));
    if (cols.size() > 3) rule.note = std::string(text::trim(cols[3]));
    if (rule.source_label.empty() || (rule.action == RuleAction::MapTo && rule.target.empty())) {
      throw Error(ErrorCode::MalformedRow, "rules line " + std::to_string(line_no) + ": missing label or target");
    }
    set.rules.push_back(std::move(rule));
  }
  return set;
}

RuleSet RuleSet::load(const std::filesystem::path& path) {
  if (!files::exists(path)) throw Error(ErrorCode::MissingFile, path.string());
  return parse(files::read_text(path));
}

std::string_view to_string(RuleErrorKind kind) {
  return kind == RuleErrorKind::UnknownTarget ? "UnknownTarget" : "DuplicateSource";
}

std::vector<RuleError> validate_rules(const RuleSet& rules, const LanguageRegistry& registry) {
  std::vector<RuleError> errors;
  std::map<std::string, std::size_t, std::less<>> seen;
  for (const auto& r : rules.rules) {
    auto key = text::casefold(r.source_label);
    if (auto [it, inserted] = seen.emplace(key, r.line); !inserted) {
      errors.push_back({RuleErrorKind::DuplicateSource, r.source_label,
                        "also defined on line " + std::to_string(it->second), r.line});
    }
    if (r.action == RuleAction::MapTo && !registry.contains(r.target)) {
      errors.push_back({RuleErrorKind::UnknownTarget, r.source_label,
                        std::string(action_name(r.action)) + " target '" + r.target + "' is not in the registry",
                        r.line});
    }
  }
  return errors;
}

std::string_view to_string(NormalizationOutcome::Kind kind) {
  switch (kind) {
    case NormalizationOutcome::Kind::Mapped: return "MAPPED";
    case NormalizationOutcome::Kind::Broad: return "BROAD";
    case NormalizationOutcome::Kind::Unmapped: return "UNMAPPED";
  }
  return "UNMAPPED";
}

Normalizer::Normalizer(const LanguageRegistry& registry, const RuleSet& rules) {
  auto errors = validate_rules(rules, registry);
  if (!errors.empty()) {
    std::string msg = "invalid normalization rules:";
    for (const auto& e : errors) {
      msg += " [line " + std::to_string(e.line) + " " + std::string(to_string(e.kind)) + ": " + e.detail + "]";
    }
    throw Error(ErrorCode::ConfigError, msg);
  }
  for (const auto& rec : registry.records()) {
    names_.emplace(text::casefold(rec.canonical_name), rec.iso639_3);
    for (const auto& a : rec.aliases) names_.emplace(text::casefold(text::trim(a)), rec.iso639_3);
  }
  for (const auto& r : rules.rules) rules_.emplace(text::casefold(r.source_label), r);
}

NormalizationOutcome Normalizer::normalize(std::string_view raw) const {
  NormalizationOutcome out;
  out.label = std::string(raw);
  auto key = text::casefold(text::trim(raw));
  if (auto it = names_.find(key); it != names_.end()) {
    out.kind = NormalizationOutcome::Kind::Mapped;
    out.code = it->second;
    return out;
  }
  if (auto it = rules_.find(key); it != rules_.end()) {
    if (it->second.action == RuleAction::MapTo) {
      out.kind = NormalizationOutcome::Kind::Mapped;
      out.code = it->second.target;
    } else {
      out.kind = NormalizationOutcome::Kind::Broad;
    }
    return out;
  }
  out.kind = NormalizationOutcome::Kind::Unmapped;
  return out;
}

NormalizationOutcome normalize_label(std::string_view raw, const RuleSet& rules, const LanguageRegistry& registry) {
  return Normalizer(registry, rules).normalize(raw);
}

}  // namespace rdiaudit::lang
