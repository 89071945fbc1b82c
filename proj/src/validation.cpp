#include "rdiaudit/validation.hpp"

#include <sstream>

#include "rdiaudit/error.hpp"
#include "rdiaudit/util/csv.hpp"
#include "rdiaudit/util/digest.hpp"
#include "rdiaudit/util/text.hpp"

namespace rdiaudit::validation {

using nlohmann::json;

std::string make_dataset_id(std::string_view canonical_name, std::string_view language, std::string_view founder) {
  return short_digest({canonical_name, language, founder});
}

Store::Store(std::vector<CandidateMention> candidates) {
  for (auto& c : candidates) {
    auto id = c.mention_id;
    if (!candidates_.emplace(id, std::move(c)).second) {
      throw Error(ErrorCode::MalformedRecord, "duplicate candidate mention id " + id);
    }
    status_.emplace(id, MentionStatus{});
  }
}

const CandidateMention* Store::candidate(std::string_view id) const {
  auto it = candidates_.find(id);
  return it == candidates_.end() ? nullptr : &it->second;
}

const MentionStatus& Store::status(std::string_view mention_id) const {
  auto it = status_.find(mention_id);
  if (it == status_.end()) throw Error(ErrorCode::UnknownMention, "unknown mention " + std::string(mention_id));
  return it->second;
}

const LiveDataset* Store::dataset(std::string_view id) const {
  auto it = datasets_.find(id);
  return it == datasets_.end() ? nullptr : &it->second;
}

void Store::require_dataset(const std::string& id) const {
  if (!datasets_.contains(id)) throw Error(ErrorCode::UnknownDataset, "unknown dataset " + id);
}

void Store::check_state(const StateChange& p) const {
  const auto& cur = status(p.mention);
  auto bad = [&](const std::string& why) {
    return Error(ErrorCode::InvalidTransition,
                 std::string(to_string(cur.state)) + " -> " + std::string(to_string(p.state)) + " for " + p.mention +
                     ": " + why);
  };
  if (p.state != State::Merged && p.target) throw bad("only MERGED takes a target");
  if (p.reason && *p.reason == kNonDistinct && p.state != State::NonDataset) {
    throw bad("NON_DISTINCT applies to NON_DATASET only");
  }
  if (p.state == State::Confirmed && (!p.canonical_name || text::trim(*p.canonical_name).empty())) {
    throw bad("CONFIRMED needs a canonical name");
  }
  if (p.state == State::Merged) {
    if (!p.target) throw bad("MERGED needs a target dataset");
    if (!datasets_.contains(*p.target)) {
      throw Error(ErrorCode::UnknownMergeTarget, "merge target " + *p.target + " is not a live dataset");
    }
  }
  if (auto f = founded_by_.find(p.mention); f != founded_by_.end()) {
    const auto& ds = datasets_.at(f->second);
    bool reconfirm = p.state == State::Confirmed && p.canonical_name == ds.canonical_name;
    if (p.state == State::Merged && *p.target == ds.dataset_id) throw bad("a mention cannot merge into its own dataset");
    if (!ds.merged.empty() && !reconfirm) {
      throw bad("dataset " + ds.dataset_id + " still has " + std::to_string(ds.merged.size()) + " merged mentions");
    }
  }
}

void Store::check(const Event& e) const {
  if (e.seq < 1) throw Error(ErrorCode::SequenceGap, "sequence numbers start at 1");
  if (e.seq <= revision()) {
    if (events_[static_cast<std::size_t>(e.seq - 1)] == e) return;
    throw Error(ErrorCode::SequenceConflict, "a different event is already recorded at seq " + std::to_string(e.seq));
  }
  if (e.seq != revision() + 1) {
    throw Error(ErrorCode::SequenceGap,
                "expected seq " + std::to_string(revision() + 1) + ", got " + std::to_string(e.seq));
  }
  std::visit(
      [&](const auto& p) {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, StateChange>) {
          check_state(p);
        } else {
          require_dataset(p.dataset);
        }
      },
      e.payload);
}

void Store::apply_state(const StateChange& p, long seq) {
  auto& st = status_.at(p.mention);
  const auto& cand = candidates_.at(p.mention);

  if (auto f = founded_by_.find(p.mention); f != founded_by_.end()) {
    if (p.state == State::Confirmed && p.canonical_name == datasets_.at(f->second).canonical_name) {
      st.last_seq = seq;
      st.reason = p.reason;
      return;
    }
    datasets_.erase(f->second);
    founded_by_.erase(f);
  }
  if (st.state == State::Merged && st.target) {
    if (auto it = datasets_.find(*st.target); it != datasets_.end()) it->second.merged.erase(p.mention);
  }

  st = MentionStatus{p.state, p.target, p.reason, p.canonical_name, seq};
  if (p.state == State::Confirmed) {
    LiveDataset ds;
    ds.canonical_name = *p.canonical_name;
    ds.founder = p.mention;
    ds.language = cand.language;
    ds.dataset_id = make_dataset_id(ds.canonical_name, ds.language, ds.founder);
    ds.founded_seq = seq;
    founded_by_[p.mention] = ds.dataset_id;
    datasets_[ds.dataset_id] = std::move(ds);
  } else if (p.state == State::Merged) {
    datasets_.at(*p.target).merged.insert(p.mention);
  }
}

void Store::apply(const Event& e) {
  check(e);
  if (e.seq <= revision()) return;  // identical replay
  std::visit(
      [&](const auto& p) {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, StateChange>) {
          apply_state(p, e.seq);
        } else if constexpr (std::is_same_v<T, AccessibilityNote>) {
          access_[p.dataset] = p;
        } else if constexpr (std::is_same_v<T, LabelAssignment>) {
          labels_[p.dataset] = p;
        } else {
          emergence_[p.dataset] = p;
        }
      },
      e.payload);
  events_.push_back(e);
}

std::string Store::snapshot() const {
  json mentions = json::object();
  for (const auto& [id, st] : status_) {
    json m = {{"state", std::string(to_string(st.state))}, {"last_seq", st.last_seq}};
    if (st.target) m["target"] = *st.target;
    if (st.reason) m["reason"] = *st.reason;
    if (st.canonical_name) m["canonical_name"] = *st.canonical_name;
    mentions[id] = std::move(m);
  }
  json datasets = json::object();
  for (const auto& [id, ds] : datasets_) {
    datasets[id] = {{"canonical_name", ds.canonical_name},
                    {"founder", ds.founder},
                    {"language", ds.language},
                    {"merged", ds.merged},
                    {"founded_seq", ds.founded_seq}};
  }
  json labels = json::object();
  for (const auto& [id, l] : labels_) {
    labels[id] = {{"tasks", l.tasks}, {"modality", std::string(to_string(l.modality))}};
  }
  json access = json::object();
  for (const auto& [id, a] : access_) {
    access[id] = {{"status", std::string(audit::to_string(a.status))},
                  {"confirmation", a.confirmation ? json(*a.confirmation) : json(nullptr)}};
  }
  json emergence = json::object();
  for (const auto& [id, r] : emergence_) emergence[id] = r.plausible;
  json snap = {{"revision", revision()},   {"mentions", std::move(mentions)}, {"datasets", std::move(datasets)},
               {"labels", std::move(labels)}, {"accessibility", std::move(access)}, {"emergence", std::move(emergence)}};
  return snap.dump();
}

Store replay(std::vector<CandidateMention> candidates, const std::vector<Event>& events) {
  Store store(std::move(candidates));
  for (const auto& e : events) store.apply(e);
  return store;
}

std::vector<DatasetRecord> consolidate(const Store& store) {
  for (const auto& [id, st] : store.candidates()) {
    const auto& s = store.status(id);
    if (s.state == State::Merged && (!s.target || !store.dataset(*s.target))) {
      throw Error(ErrorCode::DanglingMerge, "mention " + id + " is merged into a dataset that no longer exists");
    }
  }
  std::vector<DatasetRecord> out;
  out.reserve(store.datasets().size());
  for (const auto& [id, ds] : store.datasets()) {
    DatasetRecord r;
    r.dataset_id = id;
    r.canonical_name = ds.canonical_name;
    r.founder = ds.founder;
    r.member_mention_ids.insert(ds.founder);
    r.languages.insert(ds.language);
    for (const auto& m : ds.merged) {
      r.member_mention_ids.insert(m);
      r.languages.insert(store.candidate(m)->language);
    }
    if (auto it = store.labels().find(id); it != store.labels().end()) r.labels = it->second;
    out.push_back(std::move(r));
  }
  return out;
}

PipelineSummary pipeline_summary(const Store& store) {
  PipelineSummary s;
  for (const auto& [id, _] : store.candidates()) {
    const auto& st = store.status(id);
    ++s.total;
    switch (st.state) {
      case State::Pending: ++s.pending; break;
      case State::Confirmed: ++s.confirmed; break;
      case State::Unconfirmable: ++s.unconfirmable; break;
      case State::NonDataset:
        if (st.reason && *st.reason == kNonDistinct) {
          ++s.non_distinct;
        } else {
          ++s.non_dataset;
        }
        break;
      case State::Merged: ++s.merged; break;
    }
  }
  s.genuine = s.confirmed + s.merged + s.non_distinct;
  s.merged_away = s.merged + s.non_distinct;
  s.unique_datasets = static_cast<long>(store.datasets().size());
  std::set<std::string> langs;
  for (const auto& [_, ds] : store.datasets()) {
    langs.insert(ds.language);
    for (const auto& m : ds.merged) langs.insert(store.candidate(m)->language);
  }
  s.languages_covered = static_cast<long>(langs.size());
  return s;
}

double precision(const Store& store) {
  auto s = pipeline_summary(store);
  if (s.total == 0 || s.pending == s.total) throw Error(ErrorCode::NoDecisions, "no candidate has been decided yet");
  return 100.0 * static_cast<double>(s.genuine) / static_cast<double>(s.total);
}

json PipelineSummary::to_json() const {
  return json{{"total", total},
              {"pending", pending},
              {"confirmed", confirmed},
              {"unconfirmable", unconfirmable},
              {"non_dataset", non_dataset},
              {"non_distinct", non_distinct},
              {"merged", merged},
              {"genuine", genuine},
              {"merged_away", merged_away},
              {"unique_datasets", unique_datasets},
              {"languages_covered", languages_covered}};
}

std::string datasets_csv(const std::vector<DatasetRecord>& records) {
  std::ostringstream out;
  csv::write_row(out, {"dataset_id", "canonical_name", "languages", "n_mentions", "emergence_year", "accessibility"});
  for (const auto& r : records) {
    std::vector<std::string> langs(r.languages.begin(), r.languages.end());
    std::string year;
    if (r.emergence && r.emergence->emergence_year) year = std::to_string(*r.emergence->emergence_year);
    std::string access;
    if (r.accessibility) access = std::string(audit::to_string(r.accessibility->status));
    csv::write_row(out, {r.dataset_id, r.canonical_name, text::join(langs, ";"),
                         std::to_string(r.member_mention_ids.size()), year, access});
  }
  return out.str();
}

}  // namespace rdiaudit::validation
