#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "rdiaudit/mention.hpp"

namespace rdiaudit::audit {

enum class EmergenceStatus { Unique, Ambiguous, NoPaper };

struct TemporalAttribution {
  std::string dataset_id;
  std::optional<PaperRef> canonical_paper;
  std::optional<int> emergence_year;  // present iff status == Unique
  EmergenceStatus status = EmergenceStatus::NoPaper;
  std::vector<std::string> plausible;  // paper ids considered, sorted
};

enum class ProbeOutcome { Resolved, Dead, Timeout, TlsFailure };
enum class ContentKind { File, Page, Gated, Unknown };

struct UrlProbe {
  std::string dataset_id;
  std::string url;
  std::string final_url;
  std::optional<int> http_status;
  ProbeOutcome outcome = ProbeOutcome::Dead;
  ContentKind content_kind = ContentKind::Unknown;
  std::string probed_at;
  int redirects = 0;
  std::string detail;
  std::string run_id;  // audit run that produced the probe

  bool operator==(const UrlProbe&) const = default;
};

enum class AccessStatus { Open, NotOpen };

struct AccessibilityResult {
  std::string dataset_id;
  AccessStatus status = AccessStatus::NotOpen;
  std::vector<UrlProbe> probes;
  std::optional<bool> annotator_confirmation;
  std::string decided_at;
};

std::string_view to_string(EmergenceStatus s);
std::string_view to_string(ProbeOutcome o);
std::string_view to_string(ContentKind k);
std::string_view to_string(AccessStatus s);
std::optional<ProbeOutcome> probe_outcome_from_string(std::string_view s);
std::optional<ContentKind> content_kind_from_string(std::string_view s);
std::optional<AccessStatus> access_status_from_string(std::string_view s);

/// Probe evidence record: {dataset, url, final_url, outcome, content_kind,
/// probed_at, http_status?, redirects?, detail?}.
nlohmann::json probe_to_json(const UrlProbe& p);
UrlProbe probe_from_json(const nlohmann::json& j);

}  // namespace rdiaudit::audit
