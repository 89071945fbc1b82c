#include "rdiaudit/reporting.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <sstream>
#include <tuple>

#include "rdiaudit/util/csv.hpp"
#include "rdiaudit/util/text.hpp"

namespace rdiaudit::report {

using nlohmann::json;
using catalogue::Source;

std::string_view to_string(Pattern p) {
  switch (p) {
    case Pattern::AbsentInCatalogues: return "ABSENT_IN_CATALOGUES";
    case Pattern::Undercounted: return "UNDERCOUNTED";
    case Pattern::Other: return "OTHER";
  }
  return "OTHER";
}

std::optional<Pattern> pattern_from_string(std::string_view s) {
  for (auto p : {Pattern::AbsentInCatalogues, Pattern::Undercounted, Pattern::Other}) {
    if (to_string(p) == s) return p;
  }
  return std::nullopt;
}

Pattern classify_pattern(long mined, long lre, long ldc) {
  if (mined <= 0) return Pattern::Other;
  return lre + ldc == 0 ? Pattern::AbsentInCatalogues : Pattern::Undercounted;
}

std::map<std::string, long> mined_counts(const std::vector<validation::DatasetRecord>& records) {
  std::map<std::string, long> out;
  for (const auto& r : records) {
    for (const auto& lang : r.languages) ++out[lang];
  }
  return out;
}

std::vector<ComparisonRow> comparison_table(std::span<const rdi::RdiEntry> entries) {
  std::vector<ComparisonRow> rows;
  rows.reserve(entries.size());
  for (const auto& e : entries) {
    ComparisonRow r;
    r.iso639_3 = e.iso639_3;
    r.name = e.name;
    r.population_millions = e.population_millions;
    if (e.mined) r.mined = {e.mined->count, e.mined->rdi};
    if (auto it = e.per_source.find(Source::LreMap); it != e.per_source.end()) r.lre = {it->second.count, it->second.rdi};
    if (auto it = e.per_source.find(Source::Ldc); it != e.per_source.end()) r.ldc = {it->second.count, it->second.rdi};
    r.avg_catalogue_rdi = e.avg_catalogue_rdi;
    r.pattern = classify_pattern(r.mined.count, r.lre.count, r.ldc.count);
    rows.push_back(std::move(r));
  }
  std::stable_sort(rows.begin(), rows.end(), [](const ComparisonRow& a, const ComparisonRow& b) {
    auto key = [](const ComparisonRow& r) {
      return std::make_tuple(static_cast<int>(r.pattern), -text::round_half_up(r.mined.rdi, 2), -r.mined.rdi);
    };
    auto ka = key(a), kb = key(b);
    if (ka != kb) return ka < kb;
    return a.iso639_3 < b.iso639_3;
  });
  return rows;
}

std::string comparison_csv(const std::vector<ComparisonRow>& rows) {
  std::ostringstream out;
  csv::write_row(out, {"iso639_3", "name", "population_millions", "mined_count", "mined_rdi", "lre_count", "lre_rdi",
                       "ldc_count", "ldc_rdi", "avg_rdi", "pattern"});
  for (const auto& r : rows) {
    if (r.pattern == Pattern::Other) continue;
    csv::write_row(out, {r.iso639_3, r.name, text::format_shortest(r.population_millions),
                         std::to_string(r.mined.count), rdi::display(r.mined.rdi), std::to_string(r.lre.count),
                         rdi::display(r.lre.rdi), std::to_string(r.ldc.count), rdi::display(r.ldc.rdi),
                         rdi::display(r.avg_catalogue_rdi), std::string(to_string(r.pattern))});
  }
  return out.str();
}

double quantile(const std::vector<double>& sorted, double q) {
  double h = (static_cast<double>(sorted.size()) - 1.0) * q;
  auto lo = static_cast<std::size_t>(std::floor(h));
  auto hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

TrendSeries emergence_usage_trends(const std::vector<DatasetTimeline>& timelines) {
  TrendSeries t;
  for (const auto& d : timelines) {
    if (d.emergence_year) ++t.emergence[*d.emergence_year];
    for (const auto& [year, n] : d.usage) t.usage[year] += n;
    if (d.emergence_year && !d.usage.empty()) t.lags.push_back(d.usage.begin()->first - *d.emergence_year);
  }
  std::sort(t.lags.begin(), t.lags.end());
  if (!t.lags.empty()) {
    std::vector<double> v(t.lags.begin(), t.lags.end());
    t.median_lag = quantile(v, 0.5);
    t.lag_q1 = quantile(v, 0.25);
    t.lag_q3 = quantile(v, 0.75);
  }
  return t;
}

TrendSeries emergence_usage_trends(const audit::Inventory& inventory) {
  std::vector<DatasetTimeline> timelines;
  for (const auto& r : inventory.records) {
    DatasetTimeline d;
    if (r.emergence && r.emergence->status == audit::EmergenceStatus::Unique) d.emergence_year = r.emergence->emergence_year;
    if (auto it = inventory.usage.find(r.dataset_id); it != inventory.usage.end()) d.usage = it->second.years;
    timelines.push_back(std::move(d));
  }
  return emergence_usage_trends(timelines);
}

std::string trends_csv(const TrendSeries& t) {
  std::set<int> years;
  for (const auto& [y, _] : t.emergence) years.insert(y);
  for (const auto& [y, _] : t.usage) years.insert(y);
  std::ostringstream out;
  csv::write_row(out, {"year", "emergence", "usage"});
  for (int y : years) {
    auto e = t.emergence.find(y);
    auto u = t.usage.find(y);
    csv::write_row(out, {std::to_string(y), std::to_string(e == t.emergence.end() ? 0 : e->second),
                         std::to_string(u == t.usage.end() ? 0 : u->second)});
  }
  return out.str();
}

std::vector<FlowTriple> flow_export(const std::vector<validation::DatasetRecord>& records) {
  std::map<std::tuple<std::string, validation::Modality, std::string>, long> cells;
  for (const auto& r : records) {
    std::vector<std::string> tasks;
    auto modality = validation::Modality::Text;
    if (r.labels) {
      modality = r.labels->modality;
      std::set<std::string> distinct(r.labels->tasks.begin(), r.labels->tasks.end());
      tasks.assign(distinct.begin(), distinct.end());
    }
    if (tasks.empty()) tasks.emplace_back(kUnlabeledTask);
    for (const auto& lang : r.languages) {
      for (const auto& task : tasks) ++cells[{task, modality, lang}];
    }
  }
  std::vector<FlowTriple> out;
  out.reserve(cells.size());
  for (const auto& [k, n] : cells) out.push_back({std::get<0>(k), std::get<1>(k), std::get<2>(k), n});
  return out;
}

std::string flows_csv(const std::vector<FlowTriple>& flows) {
  std::ostringstream out;
  csv::write_row(out, {"task", "modality", "iso639_3", "count"});
  for (const auto& f : flows) {
    csv::write_row(out, {f.task, std::string(validation::to_string(f.modality)), f.iso639_3, std::to_string(f.count)});
  }
  return out.str();
}

namespace {

std::string edge_text(double v) {
  if (std::isinf(v)) return "inf";
  auto s = text::format_shortest(v);
  if (s.ends_with(".0")) s.resize(s.size() - 2);
  return s;
}

}  // namespace

std::vector<HistogramRow> histogram_rows(const rdi::DistributionSummary& summary) {
  std::vector<HistogramRow> rows;
  rows.push_back({"0", 0.0, 0.0, summary.zero_count});
  for (const auto& b : summary.bins) {
    std::string open = b.lo == 0.0 ? "(" : "[";
    rows.push_back({open + edge_text(b.lo) + "," + edge_text(b.hi) + ")", b.lo, b.hi, b.count});
  }
  if (!summary.bins.empty() && !std::isinf(summary.bins.back().hi)) {
    double last = summary.bins.back().hi;
    rows.push_back({"[" + edge_text(last) + ",inf)", last, std::numeric_limits<double>::infinity(),
                    summary.overflow_count});
  }
  return rows;
}

std::string histogram_export(const rdi::DistributionSummary& summary) {
  std::ostringstream out;
  csv::write_row(out, {"class", "lower", "upper", "count"});
  for (const auto& r : histogram_rows(summary)) {
    csv::write_row(out, {r.label, edge_text(r.lower), edge_text(r.upper), std::to_string(r.count)});
  }
  return out.str();
}

json report_json(const ReportBundle& b, const ReportMetadata& meta) {
  json comparison = json::array();
  for (const auto& r : b.comparison) {
    if (r.pattern == Pattern::Other) continue;
    comparison.push_back({{"iso639_3", r.iso639_3},
                          {"name", r.name},
                          {"population_millions", r.population_millions},
                          {"mined", {{"count", r.mined.count}, {"rdi", rdi::display(r.mined.rdi)}}},
                          {"lre_map", {{"count", r.lre.count}, {"rdi", rdi::display(r.lre.rdi)}}},
                          {"ldc", {{"count", r.ldc.count}, {"rdi", rdi::display(r.ldc.rdi)}}},
                          {"avg_catalogue_rdi", rdi::display(r.avg_catalogue_rdi)},
                          {"pattern", std::string(to_string(r.pattern))}});
  }
  long absent = 0, under = 0;
  for (const auto& r : b.comparison) {
    if (r.pattern == Pattern::AbsentInCatalogues) ++absent;
    if (r.pattern == Pattern::Undercounted) ++under;
  }

  json histogram = json::array();
  for (const auto& r : histogram_rows(b.distribution)) {
    histogram.push_back({{"class", r.label}, {"count", r.count}});
  }

  auto year_map = [](const std::map<int, long>& m) {
    json j = json::object();
    for (const auto& [y, n] : m) j[std::to_string(y)] = n;
    return j;
  };
  auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
  json trends = {{"emergence", year_map(b.trends.emergence)},
                 {"usage", year_map(b.trends.usage)},
                 {"lag",
                  {{"datasets", b.trends.lags.size()},
                   {"median", opt(b.trends.median_lag)},
                   {"q1", opt(b.trends.lag_q1)},
                   {"q3", opt(b.trends.lag_q3)}}}};

  json flows = json::array();
  for (const auto& f : b.flows) {
    flows.push_back({{"task", f.task},
                     {"modality", std::string(validation::to_string(f.modality))},
                     {"iso639_3", f.iso639_3},
                     {"count", f.count}});
  }

  json precision = b.precision ? json(text::format_fixed(*b.precision, 2)) : json(nullptr);
  return json{{"metadata",
               {{"snapshot_id", meta.snapshot_id},
                {"rules_version", meta.rules_version},
                {"ledger_revision", meta.ledger_revision},
                {"ledger_first_ts", meta.ledger_first_ts},
                {"ledger_last_ts", meta.ledger_last_ts},
                {"threshold", meta.threshold}}},
              {"comparison", {{"rows", comparison}, {"absent_in_catalogues", absent}, {"undercounted", under}}},
              {"distribution",
               {{"total", b.distribution.total},
                {"zero", b.distribution.zero_count},
                {"over_one", b.distribution.over_one_count},
                {"low_visibility", b.low_visibility},
                {"classes", histogram}}},
              {"trends", trends},
              {"flows", flows},
              {"validation", b.pipeline.to_json()},
              {"precision_pct", precision},
              {"attributes", b.attributes.to_json()}};
}

}  // namespace rdiaudit::report
