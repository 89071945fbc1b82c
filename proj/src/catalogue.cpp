#include "rdiaudit/catalogue.hpp"

#include <algorithm>
#include <charconv>

#include "rdiaudit/error.hpp"
#include "rdiaudit/util/csv.hpp"
#include "rdiaudit/util/files.hpp"
#include "rdiaudit/util/text.hpp"

namespace rdiaudit::catalogue {

namespace {

struct Schema {
  std::string_view id, name, type, languages, year;
};

constexpr Schema kLreSchema{"resource_id", "resource_name", "resource_type", "languages", "year"};
constexpr Schema kLdcSchema{"catalog_id", "title", "type", "language", "release_year"};

[[noreturn]] void malformed(std::size_t line, const std::string& what) {
  throw Error(ErrorCode::MalformedRecord, "record at line " + std::to_string(line) + ": " + what);
}

}  // namespace

std::string_view to_string(Source source) { return source == Source::LreMap ? "LRE_MAP" : "LDC"; }

std::optional<Source> source_from_string(std::string_view s) {
  auto folded = text::casefold(text::trim(s));
  if (folded == "lre_map" || folded == "lre" || folded == "lremap") return Source::LreMap;
  if (folded == "ldc") return Source::Ldc;
  return std::nullopt;
}

std::vector<CatalogueEntry> parse_catalogue(std::string_view text_in, Source source) {
  const Schema& schema = source == Source::LreMap ? kLreSchema : kLdcSchema;
  auto table = csv::Table::from_rows(csv::parse(text_in));
  std::vector<CatalogueEntry> entries;
  if (table.header().empty()) return entries;

  auto id_col = table.column(schema.id);
  auto lang_col = table.column(schema.languages);
  if (!id_col || !lang_col) {
    malformed(1, "header lacks '" + std::string(schema.id) + "' or '" + std::string(schema.languages) + "'");
  }
  auto name_col = table.column(schema.name);
  auto type_col = table.column(schema.type);
  auto year_col = table.column(schema.year);

  std::set<std::string, std::less<>> seen;
  for (const auto& row : table.rows()) {
    if (row.fields.size() != table.header().size()) {
      malformed(row.line, "expected " + std::to_string(table.header().size()) + " fields, got " +
                              std::to_string(row.fields.size()));
    }
    CatalogueEntry e;
    e.source = source;
    e.line = row.line;
    e.resource_id = std::string(text::trim(row.fields[*id_col]));
    if (e.resource_id.empty()) malformed(row.line, "empty resource id");
    if (!seen.insert(e.resource_id).second) {
      throw Error(ErrorCode::DuplicateResourceId,
                  std::string(to_string(source)) + " resource '" + e.resource_id + "' at line " +
                      std::to_string(row.line));
    }
    for (auto& label : text::split(row.fields[*lang_col], ';')) {
      auto t = text::trim(label);
      if (!t.empty()) e.raw_language_labels.emplace_back(t);
    }
    if (e.raw_language_labels.empty()) malformed(row.line, "no language labels");
    if (name_col) e.resource_name = std::string(text::trim(row.fields[*name_col]));
    if (type_col) e.resource_type = std::string(text::trim(row.fields[*type_col]));
    if (year_col) {
      auto y = text::trim(row.fields[*year_col]);
      if (!y.empty()) {
        int v = 0;
        auto [ptr, ec] = std::from_chars(y.data(), y.data() + y.size(), v);
        if (ec != std::errc() || ptr != y.data() + y.size()) malformed(row.line, "bad year '" + std::string(y) + "'");
        e.year = v;
      }
    }
    entries.push_back(std::move(e));
  }
  return entries;
}

std::vector<CatalogueEntry> load_catalogue(const std::filesystem::path& path, Source source) {
  if (!files::exists(path)) throw Error(ErrorCode::MissingFile, path.string());
  return parse_catalogue(files::read_text(path), source);
}

long CatalogueCounts::count(std::string_view iso639_3, Source source) const {
  auto it = counts.find({std::string(iso639_3), source});
  return it == counts.end() ? 0 : it->second;
}

CatalogueCounts count_by_language(std::span<const CatalogueEntry> entries, const lang::Normalizer& normalizer,
                                  const CountOptions& options) {
  std::set<std::string> types;
  for (const auto& t : options.types) types.insert(text::casefold(t));

  CatalogueCounts out;
  for (const auto& e : entries) {
    if (!types.empty() && !types.count(text::casefold(e.resource_type))) continue;
    std::set<std::string> codes;
    for (const auto& label : e.raw_language_labels) {
      auto outcome = normalizer.normalize(label);
      if (outcome.kind == lang::NormalizationOutcome::Kind::Mapped) {
        codes.insert(outcome.code);
      } else {
        out.exceptions.push_back({e.source, e.resource_id, outcome.kind, label});
      }
    }
    for (const auto& code : codes) ++out.counts[{code, e.source}];
  }
  // Exceptions are reported in a canonical order so that entry order never
  // changes the output.
  std::sort(out.exceptions.begin(), out.exceptions.end(), [](const ExceptionRow& a, const ExceptionRow& b) {
    return std::tie(a.source, a.resource_id, a.label) < std::tie(b.source, b.resource_id, b.label);
  });
  return out;
}

CatalogueCounts count_by_language(std::span<const CatalogueEntry> entries, const lang::LanguageRegistry& registry,
                                  const lang::RuleSet& rules, const CountOptions& options) {
  return count_by_language(entries, lang::Normalizer(registry, rules), options);
}

void write_counts_csv(std::ostream& out, const CatalogueCounts& counts, const lang::LanguageRegistry& registry) {
  csv::write_row(out, {"iso639_3", "source", "count"});
  std::vector<std::string> codes;
  for (const auto& r : registry.records()) codes.push_back(r.iso639_3);
  std::sort(codes.begin(), codes.end());
  for (const auto& code : codes) {
    for (Source s : {Source::LreMap, Source::Ldc}) {
      csv::write_row(out, {code, std::string(to_string(s)), std::to_string(counts.count(code, s))});
    }
  }
}

void write_exceptions_csv(std::ostream& out, const CatalogueCounts& counts) {
  csv::write_row(out, {"source", "resource_id", "outcome", "label"});
  for (const auto& e : counts.exceptions) {
    csv::write_row(out, {std::string(to_string(e.source)), e.resource_id, std::string(lang::to_string(e.kind)), e.label});
  }
}

CatalogueCounts read_counts_csv(std::string_view text_in) {
  auto table = csv::Table::from_rows(csv::parse(text_in));
  CatalogueCounts out;
  auto code_col = table.column("iso639_3");
  auto src_col = table.column("source");
  auto cnt_col = table.column("count");
  if (!code_col || !src_col || !cnt_col) malformed(1, "counts header must be iso639_3,source,count");
  for (const auto& row : table.rows()) {
    if (row.fields.size() < 3) malformed(row.line, "short row");
    auto src = source_from_string(row.fields[*src_col]);
    if (!src) malformed(row.line, "unknown source");
    long v = 0;
    auto f = text::trim(row.fields[*cnt_col]);
    auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
    if (ec != std::errc() || v < 0) malformed(row.line, "bad count");
    if (v > 0) out.counts[{std::string(text::trim(row.fields[*code_col])), *src}] = v;
  }
  return out;
}

}  // namespace rdiaudit::catalogue
