#include "rdiaudit/attribute_audit.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include "rdiaudit/error.hpp"
#include "rdiaudit/util/csv.hpp"
#include "rdiaudit/util/files.hpp"
#include "rdiaudit/util/text.hpp"

namespace rdiaudit::audit {

using nlohmann::json;

std::string_view to_string(EmergenceStatus s) {
  switch (s) {
    case EmergenceStatus::Unique: return "UNIQUE";
    case EmergenceStatus::Ambiguous: return "AMBIGUOUS";
    case EmergenceStatus::NoPaper: return "NO_PAPER";
  }
  return "NO_PAPER";
}

std::string_view to_string(ProbeOutcome o) {
  switch (o) {
    case ProbeOutcome::Resolved: return "RESOLVED";
    case ProbeOutcome::Dead: return "DEAD";
    case ProbeOutcome::Timeout: return "TIMEOUT";
    case ProbeOutcome::TlsFailure: return "TLS_FAILURE";
  }
  return "DEAD";
}

std::string_view to_string(ContentKind k) {
  switch (k) {
    case ContentKind::File: return "FILE";
    case ContentKind::Page: return "PAGE";
    case ContentKind::Gated: return "GATED";
    case ContentKind::Unknown: return "UNKNOWN";
  }
  return "UNKNOWN";
}

std::string_view to_string(AccessStatus s) { return s == AccessStatus::Open ? "OPEN" : "NOT_OPEN"; }

std::optional<ProbeOutcome> probe_outcome_from_string(std::string_view s) {
  for (auto o : {ProbeOutcome::Resolved, ProbeOutcome::Dead, ProbeOutcome::Timeout, ProbeOutcome::TlsFailure}) {
    if (to_string(o) == s) return o;
  }
  return std::nullopt;
}

std::optional<ContentKind> content_kind_from_string(std::string_view s) {
  for (auto k : {ContentKind::File, ContentKind::Page, ContentKind::Gated, ContentKind::Unknown}) {
    if (to_string(k) == s) return k;
  }
  return std::nullopt;
}

std::optional<AccessStatus> access_status_from_string(std::string_view s) {
  if (s == "OPEN") return AccessStatus::Open;
  if (s == "NOT_OPEN") return AccessStatus::NotOpen;
  return std::nullopt;
}

json probe_to_json(const UrlProbe& p) {
  json j = {{"dataset", p.dataset_id},
            {"url", p.url},
            {"final_url", p.final_url},
            {"outcome", std::string(to_string(p.outcome))},
            {"content_kind", std::string(to_string(p.content_kind))},
            {"probed_at", p.probed_at}};
  if (p.http_status) j["http_status"] = *p.http_status;
  if (p.redirects) j["redirects"] = p.redirects;
  if (!p.detail.empty()) j["detail"] = p.detail;
  if (!p.run_id.empty()) j["run"] = p.run_id;
  return j;
}

UrlProbe probe_from_json(const json& j) {
  UrlProbe p;
  try {
    p.dataset_id = j.at("dataset").get<std::string>();
    p.url = j.at("url").get<std::string>();
    p.final_url = j.value("final_url", p.url);
    auto o = probe_outcome_from_string(j.at("outcome").get<std::string>());
    if (!o) throw Error(ErrorCode::MalformedRecord, "unknown probe outcome for " + p.url);
    p.outcome = *o;
    auto k = content_kind_from_string(j.value("content_kind", std::string("UNKNOWN")));
    if (!k) throw Error(ErrorCode::MalformedRecord, "unknown content kind for " + p.url);
    p.content_kind = *k;
    p.probed_at = j.at("probed_at").get<std::string>();
    if (auto it = j.find("http_status"); it != j.end() && it->is_number_integer()) p.http_status = it->get<int>();
    p.redirects = j.value("redirects", 0);
    p.detail = j.value("detail", std::string{});
    p.run_id = j.value("run", std::string{});
  } catch (const json::exception& e) {
    throw Error(ErrorCode::MalformedRecord, std::string("probe record: ") + e.what());
  }
  return p;
}

TemporalAttribution attribute_emergence(const std::string& dataset_id, const std::vector<PaperRef>& candidate_papers) {
  TemporalAttribution t;
  t.dataset_id = dataset_id;
  std::map<std::string, const PaperRef*> distinct;
  for (const auto& p : candidate_papers) distinct.emplace(p.paper_id, &p);
  for (const auto& [id, _] : distinct) t.plausible.push_back(id);
  if (distinct.size() > 1) {
    t.status = EmergenceStatus::Ambiguous;
  } else if (distinct.size() == 1 && distinct.begin()->second->year) {
    t.status = EmergenceStatus::Unique;
    t.canonical_paper = *distinct.begin()->second;
    t.emergence_year = t.canonical_paper->year;
  } else {
    t.status = EmergenceStatus::NoPaper;
  }
  return t;
}

namespace {

PaperRef lookup(const PaperIndex& papers, const std::string& id) {
  auto it = papers.find(id);
  if (it != papers.end()) return it->second;
  PaperRef stub;
  stub.paper_id = id;
  return stub;
}

}  // namespace

std::vector<PaperRef> plausible_source_papers(const validation::DatasetRecord& record, const validation::Store& store,
                                              const PaperIndex& papers) {
  std::vector<PaperRef> out;
  if (auto it = store.emergence_reviews().find(record.dataset_id); it != store.emergence_reviews().end()) {
    for (const auto& id : it->second.plausible) out.push_back(lookup(papers, id));
    return out;
  }
  std::set<std::string> seen;
  for (const auto& m : record.member_mention_ids) {
    const auto* c = store.candidate(m);
    const auto& cited = c->context.cited;
    if (!seen.insert(cited.paper_id).second) continue;
    auto p = papers.contains(cited.paper_id) ? lookup(papers, cited.paper_id) : cited;
    out.push_back(std::move(p));
  }
  return out;
}

AccessibilityResult classify_accessibility(const std::string& dataset_id, const std::vector<UrlProbe>& probes,
                                           std::optional<bool> annotator_confirmation) {
  if (probes.empty()) throw Error(ErrorCode::NoProbes, "no probes recorded for dataset " + dataset_id);
  AccessibilityResult r;
  r.dataset_id = dataset_id;
  r.probes = probes;
  r.annotator_confirmation = annotator_confirmation;

  // Latest probe per URL; ISO timestamps order lexically, ties keep the later record.
  std::map<std::string, const UrlProbe*> latest;
  for (const auto& p : probes) {
    auto& slot = latest[p.url];
    if (!slot || slot->probed_at <= p.probed_at) slot = &p;
    if (r.decided_at < p.probed_at) r.decided_at = p.probed_at;
  }
  r.status = AccessStatus::NotOpen;
  if (annotator_confirmation == false) return r;
  for (const auto& [_, p] : latest) {
    if (p->outcome != ProbeOutcome::Resolved) continue;
    bool direct = p->content_kind == ContentKind::File;
    bool confirmed_page = p->content_kind != ContentKind::Gated && annotator_confirmation == true;
    if (direct || confirmed_page) {
      r.status = AccessStatus::Open;
      break;
    }
  }
  return r;
}

void check_annotation(const std::vector<UrlProbe>& probes, AccessStatus claimed, std::optional<bool> confirmation) {
  if (claimed == AccessStatus::Open && confirmation == false) {
    throw Error(ErrorCode::InconsistentAccessibility, "OPEN contradicts a negative same-dataset confirmation");
  }
  if (probes.empty()) {
    if (claimed == AccessStatus::Open) {
      throw Error(ErrorCode::InconsistentAccessibility, "OPEN needs at least one resolving probe");
    }
    return;
  }
  auto derived = classify_accessibility("", probes, confirmation).status;
  if (derived != claimed) {
    throw Error(ErrorCode::InconsistentAccessibility,
                "probe evidence with this confirmation yields " + std::string(to_string(derived)) + ", not " +
                    std::string(to_string(claimed)));
  }
}

std::optional<int> UsageYears::first() const {
  if (years.empty()) return std::nullopt;
  return years.begin()->first;
}

long UsageYears::total() const {
  long n = 0;
  for (const auto& [_, c] : years) n += c;
  return n;
}

UsageYears usage_years(const std::vector<PaperRef>& citing) {
  UsageYears u;
  for (const auto& p : citing) {
    if (p.year) {
      ++u.years[*p.year];
    } else {
      ++u.skipped;
    }
  }
  return u;
}

std::vector<PaperRef> citing_papers(const validation::DatasetRecord& record, const validation::Store& store,
                                    const PaperIndex& papers) {
  std::vector<PaperRef> out;
  std::set<std::string> seen;
  for (const auto& m : record.member_mention_ids) {
    const auto& citing = store.candidate(m)->context.citing;
    if (!seen.insert(citing.paper_id).second) continue;
    auto it = papers.find(citing.paper_id);
    out.push_back(it == papers.end() ? citing : it->second);
  }
  return out;
}

json AttributeSummary::to_json() const {
  return json{{"datasets", datasets}, {"unique", unique},     {"ambiguous", ambiguous}, {"no_paper", no_paper},
              {"open", open},         {"not_open", not_open}, {"unprobed", unprobed}};
}

Inventory build_inventory(const validation::Store& store, const PaperIndex& papers, const std::vector<UrlProbe>& probes) {
  Inventory inv;
  inv.records = validation::consolidate(store);
  std::map<std::string, std::vector<UrlProbe>> by_dataset;
  for (const auto& p : probes) by_dataset[p.dataset_id].push_back(p);

  for (auto& r : inv.records) {
    r.emergence = attribute_emergence(r.dataset_id, plausible_source_papers(r, store, papers));
    switch (r.emergence->status) {
      case EmergenceStatus::Unique: ++inv.summary.unique; break;
      case EmergenceStatus::Ambiguous: ++inv.summary.ambiguous; break;
      case EmergenceStatus::NoPaper: ++inv.summary.no_paper; break;
    }
    inv.usage[r.dataset_id] = usage_years(citing_papers(r, store, papers));

    auto it = by_dataset.find(r.dataset_id);
    if (it == by_dataset.end()) {
      ++inv.summary.unprobed;
      continue;
    }
    std::optional<bool> confirmation;
    if (auto n = store.accessibility_notes().find(r.dataset_id); n != store.accessibility_notes().end()) {
      confirmation = n->second.confirmation;
    }
    r.accessibility = classify_accessibility(r.dataset_id, it->second, confirmation);
    if (r.accessibility->status == AccessStatus::Open) {
      ++inv.summary.open;
    } else {
      ++inv.summary.not_open;
    }
  }
  inv.summary.datasets = static_cast<long>(inv.records.size());
  return inv;
}

std::vector<UrlProbe> parse_probes(std::string_view ndjson) {
  std::vector<UrlProbe> out;
  std::size_t pos = 0;
  while (pos < ndjson.size()) {
    auto nl = ndjson.find('\n', pos);
    bool torn_candidate = nl == std::string_view::npos;
    auto line = ndjson.substr(pos, torn_candidate ? std::string_view::npos : nl - pos);
    pos = torn_candidate ? ndjson.size() : nl + 1;
    if (text::trim(line).empty()) continue;
    try {
      out.push_back(probe_from_json(json::parse(line)));
    } catch (const json::exception&) {
      if (torn_candidate) break;
      throw Error(ErrorCode::MalformedRecord, "probe log: unparsable line");
    } catch (const Error&) {
      if (torn_candidate) break;
      throw;
    }
  }
  return out;
}

std::vector<UrlProbe> load_probes(const std::filesystem::path& path) {
  if (!files::exists(path)) return {};
  return parse_probes(files::read_text(path));
}

std::string accessibility_csv(const Inventory& inventory) {
  std::ostringstream out;
  csv::write_row(out, {"dataset_id", "status", "n_probes", "last_probed_at"});
  for (const auto& r : inventory.records) {
    if (!r.accessibility) continue;
    csv::write_row(out, {r.dataset_id, std::string(to_string(r.accessibility->status)),
                         std::to_string(r.accessibility->probes.size()), r.accessibility->decided_at});
  }
  return out.str();
}

}  // namespace rdiaudit::audit
