#include "rdiaudit/mention.hpp"

#include "rdiaudit/error.hpp"
#include "rdiaudit/util/digest.hpp"
#include "rdiaudit/util/text.hpp"

namespace rdiaudit {

using nlohmann::json;

std::string_view to_string(Direction d) { return d == Direction::Outgoing ? "OUTGOING" : "INCOMING"; }

std::optional<Direction> direction_from_string(std::string_view s) {
  if (s == "OUTGOING") return Direction::Outgoing;
  if (s == "INCOMING") return Direction::Incoming;
  return std::nullopt;
}

std::string_view to_string(Backend b) { return b == Backend::Llm ? "LLM" : "HEURISTIC"; }

std::string context_digest(std::string_view context_text) { return sha256_hex(context_text).substr(0, 16); }

std::string make_mention_id(std::string_view language, std::string_view citing_id, std::string_view cited_id,
                            std::string_view context_text) {
  return short_digest({language, citing_id, cited_id, context_digest(context_text)});
}

json paper_to_json(const PaperRef& p) {
  json j = {{"paper_id", p.paper_id}, {"title", p.title}};
  j["year"] = p.year ? json(*p.year) : json(nullptr);
  if (p.venue) j["venue"] = *p.venue;
  if (p.abstract) j["abstract"] = *p.abstract;
  return j;
}

PaperRef paper_from_json(const json& j) {
  PaperRef p;
  p.paper_id = j.at("paper_id").get<std::string>();
  p.title = j.value("title", std::string{});
  if (auto it = j.find("year"); it != j.end() && it->is_number_integer()) p.year = it->get<int>();
  if (auto it = j.find("venue"); it != j.end() && it->is_string()) p.venue = it->get<std::string>();
  if (auto it = j.find("abstract"); it != j.end() && it->is_string()) p.abstract = it->get<std::string>();
  return p;
}

json verdict_to_json(const ClassifierVerdict& v) {
  json j = {{"is_dataset", v.is_dataset}, {"backend", std::string(to_string(v.backend))},
            {"context_digest", v.context_digest}};
  if (v.extracted_name) j["name"] = *v.extracted_name;
  if (v.rationale) j["rationale"] = *v.rationale;
  if (v.confidence) j["confidence"] = *v.confidence;
  return j;
}

ClassifierVerdict verdict_from_json(const json& j) {
  ClassifierVerdict v;
  v.is_dataset = j.at("is_dataset").get<bool>();
  v.backend = j.value("backend", std::string{"HEURISTIC"}) == "LLM" ? Backend::Llm : Backend::Heuristic;
  v.context_digest = j.value("context_digest", std::string{});
  if (auto it = j.find("name"); it != j.end() && it->is_string()) v.extracted_name = it->get<std::string>();
  if (auto it = j.find("rationale"); it != j.end() && it->is_string()) v.rationale = it->get<std::string>();
  if (auto it = j.find("confidence"); it != j.end() && it->is_number()) v.confidence = it->get<double>();
  return v;
}

json candidate_to_record(const CandidateMention& m) {
  return json{{"mention_id", m.mention_id},
              {"language", m.language},
              {"citing", m.context.citing.paper_id},
              {"cited", m.context.cited.paper_id},
              {"context", m.context.context_text},
              {"direction", std::string(to_string(m.context.direction))}};
}

CandidateMention candidate_from_record(const json& j, const PaperIndex& papers) {
  CandidateMention m;
  try {
    m.mention_id = j.at("mention_id").get<std::string>();
    m.language = j.at("language").get<std::string>();
    m.context.context_text = j.at("context").get<std::string>();
    auto dir = direction_from_string(j.at("direction").get<std::string>());
    if (!dir) throw Error(ErrorCode::MalformedRecord, "bad direction in candidate " + m.mention_id);
    m.context.direction = *dir;
    auto resolve = [&](const char* key) {
      auto id = j.at(key).get<std::string>();
      auto it = papers.find(id);
      if (it == papers.end()) {
        throw Error(ErrorCode::MalformedRecord, "candidate " + m.mention_id + " references unknown paper " + id);
      }
      return it->second;
    };
    m.context.citing = resolve("citing");
    m.context.cited = resolve("cited");
    if (auto it = j.find("extracted_name"); it != j.end() && it->is_string()) m.extracted_name = it->get<std::string>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::MalformedRecord, std::string("candidate record: ") + e.what());
  }
  return m;
}

std::vector<json> parse_ndjson(std::string_view text_in) {
  std::vector<json> out;
  std::size_t line_no = 0;
  for (const auto& line : text::split(text_in, '\n')) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    try {
      out.push_back(json::parse(line));
    } catch (const json::exception& e) {
      throw Error(ErrorCode::MalformedRecord, "line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

std::string to_ndjson(const std::vector<json>& records) {
  std::string out;
  for (const auto& r : records) {
    out += r.dump();
    out += '\n';
  }
  return out;
}

}  // namespace rdiaudit
