#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "rdiaudit/audit_types.hpp"
#include "rdiaudit/ledger.hpp"
#include "rdiaudit/mention.hpp"

namespace rdiaudit::validation {

struct MentionStatus {
  State state = State::Pending;
  std::optional<std::string> target;
  std::optional<std::string> reason;
  std::optional<std::string> canonical_name;
  long last_seq = 0;

  bool operator==(const MentionStatus&) const = default;
};

/// A live dataset: founded by one CONFIRMED mention, joined by MERGED ones.
struct LiveDataset {
  std::string dataset_id;
  std::string canonical_name;
  std::string founder;
  std::string language;  // founder's language
  std::set<std::string> merged;
  long founded_seq = 0;

  bool operator==(const LiveDataset&) const = default;
};

struct DatasetRecord {
  std::string dataset_id;
  std::string canonical_name;
  std::set<std::string> languages;
  std::set<std::string> member_mention_ids;
  std::string founder;
  std::optional<LabelAssignment> labels;
  std::optional<audit::TemporalAttribution> emergence;
  std::optional<audit::AccessibilityResult> accessibility;
};

/// dataset_id = short digest of (canonical name, language, founding mention).
std::string make_dataset_id(std::string_view canonical_name, std::string_view language, std::string_view founder);

/// Candidate states and annotations derived from an event sequence. Every
/// mutation goes through apply(), which validates before changing anything.
class Store {
 public:
  Store() = default;
  /// Throws MalformedRecord on duplicate mention ids.
  explicit Store(std::vector<CandidateMention> candidates);

  /// Validates `e` against the current state without changing it. Throws
  /// SequenceGap, SequenceConflict, UnknownMention, UnknownMergeTarget,
  /// UnknownDataset, InvalidTransition.
  void check(const Event& e) const;

  /// check() then apply. An event identical to the one already recorded at
  /// its sequence number is a no-op.
  void apply(const Event& e);

  long revision() const { return static_cast<long>(events_.size()); }
  const std::vector<Event>& events() const { return events_; }

  const std::map<std::string, CandidateMention, std::less<>>& candidates() const { return candidates_; }
  const CandidateMention* candidate(std::string_view id) const;
  const MentionStatus& status(std::string_view mention_id) const;  // throws UnknownMention
  const std::map<std::string, LiveDataset, std::less<>>& datasets() const { return datasets_; }
  const LiveDataset* dataset(std::string_view id) const;

  const std::map<std::string, LabelAssignment, std::less<>>& labels() const { return labels_; }
  const std::map<std::string, AccessibilityNote, std::less<>>& accessibility_notes() const { return access_; }
  const std::map<std::string, EmergenceReview, std::less<>>& emergence_reviews() const { return emergence_; }

  /// Canonical serialization of the derived state, for replay equality.
  std::string snapshot() const;

 private:
  void check_state(const StateChange& p) const;
  void apply_state(const StateChange& p, long seq);
  void require_dataset(const std::string& id) const;

  std::map<std::string, CandidateMention, std::less<>> candidates_;
  std::map<std::string, MentionStatus, std::less<>> status_;
  std::map<std::string, LiveDataset, std::less<>> datasets_;
  std::map<std::string, std::string, std::less<>> founded_by_;  // founder mention -> dataset id
  std::map<std::string, LabelAssignment, std::less<>> labels_;
  std::map<std::string, AccessibilityNote, std::less<>> access_;
  std::map<std::string, EmergenceReview, std::less<>> emergence_;
  std::vector<Event> events_;
};

/// Applies `events` in order to a fresh store over `candidates`.
Store replay(std::vector<CandidateMention> candidates, const std::vector<Event>& events);

/// One record per live dataset, sorted by dataset id, with labels attached.
/// Throws DanglingMerge if a MERGED mention points at no live dataset.
std::vector<DatasetRecord> consolidate(const Store& store);

/// (CONFIRMED + MERGED + NON_DISTINCT) / total, as a percentage. Throws
/// NoDecisions when nothing has been decided.
double precision(const Store& store);

struct PipelineSummary {
  long total = 0;
  long pending = 0;
  long confirmed = 0;
  long unconfirmable = 0;
  long non_dataset = 0;   // excluding NON_DISTINCT
  long non_distinct = 0;  // NON_DATASET with reason NON_DISTINCT
  long merged = 0;
  long genuine = 0;       // confirmed + merged + non_distinct
  long merged_away = 0;   // merged + non_distinct
  long unique_datasets = 0;
  long languages_covered = 0;

  bool operator==(const PipelineSummary&) const = default;
  nlohmann::json to_json() const;
};

PipelineSummary pipeline_summary(const Store& store);

/// `dataset_id,canonical_name,languages,n_mentions,emergence_year,accessibility`.
std::string datasets_csv(const std::vector<DatasetRecord>& records);

}  // namespace rdiaudit::validation
