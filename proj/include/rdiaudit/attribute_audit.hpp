#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "rdiaudit/audit_types.hpp"
#include "rdiaudit/mention.hpp"
#include "rdiaudit/validation.hpp"

namespace rdiaudit::audit {

/// UNIQUE when exactly one distinct plausible paper remains and it carries a
/// year; AMBIGUOUS for several; NO_PAPER for none or a sole paper without a
/// year. The emergence year is always the canonical paper's own year.
TemporalAttribution attribute_emergence(const std::string& dataset_id, const std::vector<PaperRef>& candidate_papers);

/// Plausible source papers for a dataset: the annotator's emergence review
/// when one exists, otherwise the distinct cited papers of its members.
/// Ids missing from `papers` are kept as year-less stubs.
std::vector<PaperRef> plausible_source_papers(const validation::DatasetRecord& record, const validation::Store& store,
                                              const PaperIndex& papers);

/// Evaluates the most recent probe of each distinct URL. OPEN iff one of
/// them is RESOLVED and either served a file or (not gated and the annotator
/// confirmed an unrestricted procedure). An explicit `false` confirmation
/// forces NOT_OPEN. Throws NoProbes.
AccessibilityResult classify_accessibility(const std::string& dataset_id, const std::vector<UrlProbe>& probes,
                                           std::optional<bool> annotator_confirmation);

/// Throws InconsistentAccessibility when an annotator's claimed status cannot
/// follow from the probe evidence plus their confirmation.
void check_annotation(const std::vector<UrlProbe>& probes, AccessStatus claimed, std::optional<bool> confirmation);

struct UsageYears {
  std::map<int, long> years;
  long skipped = 0;  // citing papers without a year

  std::optional<int> first() const;
  long total() const;
};

UsageYears usage_years(const std::vector<PaperRef>& citing_papers);

/// Distinct citing papers of a dataset's member mentions.
std::vector<PaperRef> citing_papers(const validation::DatasetRecord& record, const validation::Store& store,
                                    const PaperIndex& papers);

struct AttributeSummary {
  long datasets = 0;
  long unique = 0;
  long ambiguous = 0;
  long no_paper = 0;
  long open = 0;
  long not_open = 0;
  long unprobed = 0;

  nlohmann::json to_json() const;
};

struct Inventory {
  std::vector<validation::DatasetRecord> records;  // sorted by dataset id
  std::map<std::string, UsageYears> usage;         // by dataset id
  AttributeSummary summary;
};

/// Consolidates the store and attaches emergence, usage and accessibility.
/// Probes for datasets that are no longer live are ignored.
Inventory build_inventory(const validation::Store& store, const PaperIndex& papers,
                          const std::vector<UrlProbe>& probes);

/// `dataset_id,status,n_probes,last_probed_at` for probed datasets.
/// Probe log lines; a torn final line without newline is dropped.
std::vector<UrlProbe> parse_probes(std::string_view ndjson);
/// Empty when the file does not exist.
std::vector<UrlProbe> load_probes(const std::filesystem::path& path);

std::string accessibility_csv(const Inventory& inventory);

}  // namespace rdiaudit::audit
