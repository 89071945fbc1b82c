#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "rdiaudit/attribute_audit.hpp"
#include "rdiaudit/rdi.hpp"
#include "rdiaudit/validation.hpp"

namespace rdiaudit::report {

enum class Pattern { AbsentInCatalogues, Undercounted, Other };

std::string_view to_string(Pattern p);
std::optional<Pattern> pattern_from_string(std::string_view s);

/// ABSENT_IN_CATALOGUES: mined evidence, no catalogue entry at all.
/// UNDERCOUNTED: mined evidence plus any catalogue presence. OTHER otherwise.
Pattern classify_pattern(long mined, long lre, long ldc);

struct Count {
  long count = 0;
  double rdi = 0.0;  // unrounded
};

struct ComparisonRow {
  std::string iso639_3;
  std::string name;
  double population_millions = 0.0;
  Count mined;
  Count lre;
  Count ldc;
  double avg_catalogue_rdi = 0.0;
  Pattern pattern = Pattern::Other;
};

/// Datasets per language; a multilingual dataset counts once for each of its
/// languages.
std::map<std::string, long> mined_counts(const std::vector<validation::DatasetRecord>& records);

/// One row per entry. Ordered by pattern (ABSENT, UNDERCOUNTED, OTHER), then
/// displayed mined RDI descending, unrounded mined RDI descending, code.
std::vector<ComparisonRow> comparison_table(std::span<const rdi::RdiEntry> entries);

/// Table rows only (OTHER rows are left out), values rounded for display.
std::string comparison_csv(const std::vector<ComparisonRow>& rows);

struct DatasetTimeline {
  std::optional<int> emergence_year;  // set only for UNIQUE attributions
  std::map<int, long> usage;          // usage year -> citing papers
};

struct TrendSeries {
  std::map<int, long> emergence;
  std::map<int, long> usage;
  std::vector<int> lags;  // first usage year minus emergence year, sorted
  std::optional<double> median_lag;
  std::optional<double> lag_q1;
  std::optional<double> lag_q3;
};

/// Quantile with linear interpolation between order statistics (the
/// "type 7" estimator). `sorted` must be nonempty and ascending.
double quantile(const std::vector<double>& sorted, double q);

TrendSeries emergence_usage_trends(const std::vector<DatasetTimeline>& timelines);
TrendSeries emergence_usage_trends(const audit::Inventory& inventory);

/// `year,emergence,usage` over the union of years.
std::string trends_csv(const TrendSeries& t);

struct FlowTriple {
  std::string task;
  validation::Modality modality = validation::Modality::Text;
  std::string iso639_3;
  long count = 0;
};

inline constexpr std::string_view kUnlabeledTask = "Unlabeled";

/// Aggregated (task, modality, language) counts, sorted by key. Datasets
/// without labels go to task "Unlabeled" with modality TEXT.
std::vector<FlowTriple> flow_export(const std::vector<validation::DatasetRecord>& records);
std::string flows_csv(const std::vector<FlowTriple>& flows);

struct HistogramRow {
  std::string label;  // "0", "(0,0.1)", "[0.1,0.25)", ... "[1,inf)"
  double lower = 0.0;
  double upper = 0.0;
  long count = 0;
};

std::vector<HistogramRow> histogram_rows(const rdi::DistributionSummary& summary);
/// `class,lower,upper,count`, one row per class including the zero class.
std::string histogram_export(const rdi::DistributionSummary& summary);

struct ReportMetadata {
  std::string snapshot_id;
  std::string rules_version;
  long ledger_revision = 0;
  std::string ledger_first_ts;
  std::string ledger_last_ts;
  double threshold = rdi::kLowVisibilityThreshold;
};

struct ReportBundle {
  std::vector<ComparisonRow> comparison;
  rdi::DistributionSummary distribution;
  long low_visibility = 0;
  TrendSeries trends;
  std::vector<FlowTriple> flows;
  validation::PipelineSummary pipeline;
  audit::AttributeSummary attributes;
  std::optional<double> precision;
};

/// Deterministic JSON document bundling every report plus metadata. No wall
/// clock values are included.
nlohmann::json report_json(const ReportBundle& bundle, const ReportMetadata& meta);

}  // namespace rdiaudit::report
