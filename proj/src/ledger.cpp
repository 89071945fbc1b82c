#include "rdiaudit/ledger.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <fstream>

#include "rdiaudit/error.hpp"
#include "rdiaudit/util/files.hpp"
#include "rdiaudit/util/log.hpp"
#include "rdiaudit/util/text.hpp"

namespace rdiaudit::validation {

using nlohmann::json;

std::string_view to_string(State s) {
  switch (s) {
    case State::Pending: return "PENDING";
    case State::Confirmed: return "CONFIRMED";
    case State::Unconfirmable: return "UNCONFIRMABLE";
    case State::NonDataset: return "NON_DATASET";
    case State::Merged: return "MERGED";
  }
  return "PENDING";
}

std::optional<State> state_from_string(std::string_view s) {
  for (auto st : {State::Pending, State::Confirmed, State::Unconfirmable, State::NonDataset, State::Merged}) {
    if (to_string(st) == s) return st;
  }
  return std::nullopt;
}

std::string_view to_string(Modality m) {
  switch (m) {
    case Modality::Text: return "TEXT";
    case Modality::Speech: return "SPEECH";
    case Modality::Multimodal: return "MULTIMODAL";
  }
  return "TEXT";
}

std::optional<Modality> modality_from_string(std::string_view s) {
  for (auto m : {Modality::Text, Modality::Speech, Modality::Multimodal}) {
    if (to_string(m) == s) return m;
  }
  return std::nullopt;
}

namespace {

struct ToJson {
  json& j;
  void operator()(const StateChange& p) const {
    j["kind"] = "state";
    j["mention"] = p.mention;
    j["state"] = std::string(to_string(p.state));
    if (p.target) j["target"] = *p.target;
    if (p.reason) j["reason"] = *p.reason;
    if (p.canonical_name) j["canonical_name"] = *p.canonical_name;
  }
  void operator()(const AccessibilityNote& p) const {
    j["kind"] = "accessibility";
    j["dataset"] = p.dataset;
    j["status"] = std::string(audit::to_string(p.status));
    if (p.confirmation) j["confirmation"] = *p.confirmation;
  }
  void operator()(const LabelAssignment& p) const {
    j["kind"] = "labels";
    j["dataset"] = p.dataset;
    j["tasks"] = p.tasks;
    j["modality"] = std::string(to_string(p.modality));
  }
  void operator()(const EmergenceReview& p) const {
    j["kind"] = "emergence";
    j["dataset"] = p.dataset;
    j["plausible"] = p.plausible;
  }
};

std::optional<std::string> opt_string(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  return it->get<std::string>();
}

}  // namespace

json Event::to_json() const {
  json j = {{"seq", seq}, {"ts", ts}, {"annotator", annotator}};
  if (note) j["note"] = *note;
  std::visit(ToJson{j}, payload);
  return j;
}

Event Event::from_json(const json& j) {
  Event e;
  try {
    e.seq = j.at("seq").get<long>();
    e.ts = j.at("ts").get<std::string>();
    e.annotator = j.at("annotator").get<std::string>();
    e.note = opt_string(j, "note");
    auto kind = j.at("kind").get<std::string>();
    if (kind == "state") {
      StateChange p;
      p.mention = j.at("mention").get<std::string>();
      auto st = state_from_string(j.at("state").get<std::string>());
      if (!st) throw Error(ErrorCode::MalformedRecord, "unknown state in event " + std::to_string(e.seq));
      p.state = *st;
      p.target = opt_string(j, "target");
      p.reason = opt_string(j, "reason");
      p.canonical_name = opt_string(j, "canonical_name");
      e.payload = std::move(p);
    } else if (kind == "accessibility") {
      AccessibilityNote p;
      p.dataset = j.at("dataset").get<std::string>();
      auto st = audit::access_status_from_string(j.at("status").get<std::string>());
      if (!st) throw Error(ErrorCode::MalformedRecord, "unknown access status in event " + std::to_string(e.seq));
      p.status = *st;
      if (auto it = j.find("confirmation"); it != j.end() && !it->is_null()) p.confirmation = it->get<bool>();
      e.payload = std::move(p);
    } else if (kind == "labels") {
      LabelAssignment p;
      p.dataset = j.at("dataset").get<std::string>();
      p.tasks = j.at("tasks").get<std::vector<std::string>>();
      auto m = modality_from_string(j.at("modality").get<std::string>());
      if (!m) throw Error(ErrorCode::MalformedRecord, "unknown modality in event " + std::to_string(e.seq));
      p.modality = *m;
      e.payload = std::move(p);
    } else if (kind == "emergence") {
      EmergenceReview p;
      p.dataset = j.at("dataset").get<std::string>();
      p.plausible = j.at("plausible").get<std::vector<std::string>>();
      e.payload = std::move(p);
    } else {
      throw Error(ErrorCode::MalformedRecord, "unknown event kind '" + kind + "'");
    }
  } catch (const json::exception& ex) {
    throw Error(ErrorCode::MalformedRecord, std::string("ledger event: ") + ex.what());
  }
  return e;
}

std::vector<Event> parse_ledger(std::string_view text_in) {
  std::vector<Event> out;
  std::size_t pos = 0;
  std::size_t line_no = 0;
  while (pos < text_in.size()) {
    auto nl = text_in.find('\n', pos);
    bool terminated = nl != std::string_view::npos;
    auto line = text_in.substr(pos, terminated ? nl - pos : std::string_view::npos);
    pos = terminated ? nl + 1 : text_in.size();
    ++line_no;
    if (text::trim(line).empty()) continue;
    try {
      out.push_back(Event::from_json(json::parse(line)));
    } catch (const std::exception& e) {
      if (!terminated) {
        log::warn("ledger: dropping torn trailing line " + std::to_string(line_no));
        break;
      }
      throw Error(ErrorCode::MalformedRecord, "ledger line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

LedgerFile::LedgerFile(std::filesystem::path path) : path_(std::move(path)) {}

std::vector<Event> LedgerFile::load() const {
  if (!files::exists(path_)) return {};
  return parse_ledger(files::read_text(path_));
}

void LedgerFile::append(const Event& e) const {
  // A crash mid-append can leave a partial last line; cut it back to the
  // last complete record so the new event starts on its own line.
  if (files::repair_torn_tail(path_)) log::warn("ledger: removed torn trailing line before append");
  files::append_line_durable(path_, e.line());
}

}  // namespace rdiaudit::validation
