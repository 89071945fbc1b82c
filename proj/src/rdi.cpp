#include "rdiaudit/rdi.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "rdiaudit/error.hpp"
#include "rdiaudit/util/csv.hpp"
#include "rdiaudit/util/text.hpp"

namespace rdiaudit::rdi {

double compute_rdi(long count, double population_millions) {
  if (!(population_millions > 0.0)) {
    throw Error(ErrorCode::NonPositivePopulation, "population must be positive");
  }
  if (count < 0) throw Error(ErrorCode::PreconditionViolation, "dataset count must be nonnegative");
  return static_cast<double>(count) / population_millions;
}

double average_catalogue_rdi(const RdiEntry& entry) {
  auto lre = entry.per_source.find(Source::LreMap);
  auto ldc = entry.per_source.find(Source::Ldc);
  if (lre == entry.per_source.end() || ldc == entry.per_source.end()) {
    throw Error(ErrorCode::MissingSource, "entry " + entry.iso639_3 + " lacks a catalogue source");
  }
  return (lre->second.rdi + ldc->second.rdi) / 2.0;
}

std::vector<RdiEntry> build_entries(const lang::LanguageRegistry& registry, const catalogue::CatalogueCounts& counts) {
  std::vector<RdiEntry> out;
  out.reserve(registry.size());
  for (const auto& rec : registry.records()) {
    RdiEntry e;
    e.iso639_3 = rec.iso639_3;
    e.name = rec.canonical_name;
    e.population_millions = rec.population_millions;
    for (Source s : {Source::LreMap, Source::Ldc}) {
      long c = counts.count(rec.iso639_3, s);
      e.per_source[s] = {c, compute_rdi(c, rec.population_millions)};
    }
    e.avg_catalogue_rdi = average_catalogue_rdi(e);
    out.push_back(std::move(e));
  }
  return out;
}

void attach_mined_counts(std::vector<RdiEntry>& entries, const std::map<std::string, long>& mined_counts) {
  for (auto& e : entries) {
    auto it = mined_counts.find(e.iso639_3);
    long c = it == mined_counts.end() ? 0 : it->second;
    e.mined = SourceValue{c, compute_rdi(c, e.population_millions)};
  }
}

std::vector<RdiEntry> low_visibility_filter(std::span<const RdiEntry> entries, double threshold) {
  std::vector<RdiEntry> out;
  std::copy_if(entries.begin(), entries.end(), std::back_inserter(out),
               [threshold](const RdiEntry& e) { return e.avg_catalogue_rdi < threshold; });
  return out;
}

std::vector<double> default_bin_edges() {
  return {0.0, 0.1, 0.25, 0.5, 1.0, std::numeric_limits<double>::infinity()};
}

DistributionSummary distribution_summary(std::span<const double> values, std::span<const double> bin_edges) {
  if (bin_edges.size() < 2 || bin_edges.front() != 0.0) {
    throw Error(ErrorCode::InvalidBins, "bin edges must start at 0 and contain at least two values");
  }
  for (std::size_t i = 1; i < bin_edges.size(); ++i) {
    if (!(bin_edges[i] > bin_edges[i - 1])) throw Error(ErrorCode::InvalidBins, "bin edges must be strictly increasing");
  }

  DistributionSummary s;
  for (std::size_t i = 0; i + 1 < bin_edges.size(); ++i) s.bins.push_back({bin_edges[i], bin_edges[i + 1], 0});

  for (double v : values) {
    ++s.total;
    if (v > 1.0) ++s.over_one_count;
    if (v == 0.0) {
      ++s.zero_count;
      continue;
    }
    // First bin whose upper edge exceeds v; bins are [lo, hi).
    auto it = std::upper_bound(bin_edges.begin(), bin_edges.end(), v);
    if (it == bin_edges.end()) {
      ++s.overflow_count;
    } else {
      auto idx = static_cast<std::size_t>(std::distance(bin_edges.begin(), it)) - 1;
      ++s.bins[idx].count;
    }
  }
  return s;
}

DistributionSummary distribution_summary(std::span<const RdiEntry> entries, std::span<const double> bin_edges) {
  std::vector<double> values;
  values.reserve(entries.size());
  for (const auto& e : entries) values.push_back(e.avg_catalogue_rdi);
  return distribution_summary(values, bin_edges);
}

std::string display(double rdi) { return text::format_fixed(rdi, 2); }

void write_rdi_csv(std::ostream& out, std::span<const RdiEntry> entries) {
  bool with_mined = std::any_of(entries.begin(), entries.end(), [](const RdiEntry& e) { return e.mined.has_value(); });
  std::vector<std::string> header{"iso639_3", "population_millions", "lre_count", "lre_rdi", "ldc_count",
                                  "ldc_rdi",  "avg_rdi"};
  if (with_mined) {
    header.emplace_back("mined_count");
    header.emplace_back("mined_rdi");
  }
  csv::write_row(out, header);
  for (const auto& e : entries) {
    auto value = [&](Source s) {
      auto it = e.per_source.find(s);
      return it == e.per_source.end() ? SourceValue{} : it->second;
    };
    auto lre = value(Source::LreMap);
    auto ldc = value(Source::Ldc);
    std::vector<std::string> row{e.iso639_3,          text::format_shortest(e.population_millions),
                                 std::to_string(lre.count), display(lre.rdi),
                                 std::to_string(ldc.count), display(ldc.rdi),
                                 display(e.avg_catalogue_rdi)};
    if (with_mined) {
      auto m = e.mined.value_or(SourceValue{});
      row.push_back(std::to_string(m.count));
      row.push_back(display(m.rdi));
    }
    csv::write_row(out, row);
  }
}

}  // namespace rdiaudit::rdi
