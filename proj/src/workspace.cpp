#include "rdiaudit/workspace.hpp"

#include <charconv>
#include <cstdlib>

#include "rdiaudit/error.hpp"
#include "rdiaudit/util/digest.hpp"
#include "rdiaudit/util/files.hpp"
#include "rdiaudit/util/text.hpp"

namespace rdiaudit::cli {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr Stage kStages[] = {Stage::Ingest,     Stage::Rdi,    Stage::Discover, Stage::Classify,
                             Stage::Serve,      Stage::AuditLinks, Stage::Report, Stage::Status};

}  // namespace

std::string_view to_string(Stage s) {
  switch (s) {
    case Stage::Ingest: return "ingest";
    case Stage::Rdi: return "rdi";
    case Stage::Discover: return "discover";
    case Stage::Classify: return "classify";
    case Stage::Serve: return "serve";
    case Stage::AuditLinks: return "audit-links";
    case Stage::Report: return "report";
    case Stage::Status: return "status";
  }
  return "status";
}

std::optional<Stage> stage_from_string(std::string_view s) {
  for (auto st : kStages) {
    if (to_string(st) == s) return st;
  }
  return std::nullopt;
}

Workspace::Workspace(fs::path root) : root_(std::move(root)) {}

fs::path Workspace::marker(Stage s) const { return stages() / (std::string(to_string(s)) + ".json"); }

std::optional<json> Workspace::read_marker(Stage s) const {
  auto p = marker(s);
  if (!files::exists(p)) return std::nullopt;
  try {
    return json::parse(files::read_text(p));
  } catch (const json::exception&) {
    return std::nullopt;  // half-written marker counts as absent
  }
}

void Workspace::write_marker(Stage s, const json& m) const { files::write_atomic(marker(s), m.dump(2) + "\n"); }

void Workspace::clear_marker(Stage s) const {
  std::error_code ec;
  fs::remove(marker(s), ec);
}

std::string digest_files(const std::vector<fs::path>& paths) {
  std::string acc;
  for (const auto& p : paths) {
    acc += p.filename().string();
    acc.push_back('\x1f');
    acc += files::exists(p) ? sha256_hex(files::read_text(p)) : std::string("absent");
    acc.push_back('\x1e');
  }
  return sha256_hex(acc);
}

EnvLookup process_env() {
  return [](const std::string& name) -> std::optional<std::string> {
    const char* v = std::getenv(name.c_str());
    if (!v) return std::nullopt;
    return std::string(v);
  };
}

namespace {

struct Key {
  const char* name;
  const char* env;
  enum Kind { Bool, Number, Int, String, List } kind;
};

const Key kKeys[] = {
    {"replay", "RDIAUDIT_REPLAY", Key::Bool},
    {"threshold", "RDIAUDIT_THRESHOLD", Key::Number},
    {"k", "RDIAUDIT_K", Key::Int},
    {"types", "RDIAUDIT_TYPES", Key::List},
    {"languages", "RDIAUDIT_LANGUAGES", Key::List},
    {"scholar_url", "RDIAUDIT_SCHOLAR_URL", Key::String},
    {"scholar_api_key", "RDIAUDIT_SCHOLAR_API_KEY", Key::String},
    {"scholar_rps", "RDIAUDIT_SCHOLAR_RPS", Key::Number},
    {"llm_endpoint", "RDIAUDIT_LLM_ENDPOINT", Key::String},
    {"llm_model", "RDIAUDIT_LLM_MODEL", Key::String},
    {"llm_api_key", "RDIAUDIT_LLM_API_KEY", Key::String},
    {"llm_fallback", "RDIAUDIT_LLM_FALLBACK", Key::Bool},
    {"host", "RDIAUDIT_HOST", Key::String},
    {"port", "RDIAUDIT_PORT", Key::Int},
    {"token", "RDIAUDIT_TOKEN", Key::String},
    {"static_dir", "RDIAUDIT_STATIC_DIR", Key::String},
    {"workers", "RDIAUDIT_WORKERS", Key::Int},
    {"probe_timeout_s", "RDIAUDIT_PROBE_TIMEOUT_S", Key::Int},
    {"max_in_flight", "RDIAUDIT_MAX_IN_FLIGHT", Key::Int},
    {"per_host", "RDIAUDIT_PER_HOST", Key::Int},
    {"annotator", "RDIAUDIT_ANNOTATOR", Key::String},
    {"force", "RDIAUDIT_FORCE", Key::Bool},
};

template <class T>
std::optional<T> parse_number(std::string_view s) {
  T v{};
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) return std::nullopt;
  return v;
}

const Key* find_key(std::string_view name) {
  for (const auto& k : kKeys) {
    if (name == k.name) return &k;
  }
  return nullptr;
}

json parse_env_value(const Key& k, const std::string& raw) {
  auto bad = [&] { return Error(ErrorCode::ConfigError, std::string(k.env) + ": cannot parse '" + raw + "'"); };
  switch (k.kind) {
    case Key::Bool: {
      auto v = text::casefold(text::trim(raw));
      if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
      if (v == "0" || v == "false" || v == "no" || v == "off" || v.empty()) return false;
      throw bad();
    }
    case Key::Number: {
      auto v = parse_number<double>(text::trim(raw));
      if (!v) throw bad();
      return *v;
    }
    case Key::Int: {
      auto v = parse_number<int>(text::trim(raw));
      if (!v) throw bad();
      return *v;
    }
    case Key::String: return raw;
    case Key::List: {
      json arr = json::array();
      for (auto part : text::split(raw, ',')) {
        auto t = text::trim(part);
        if (!t.empty()) arr.push_back(std::string(t));
      }
      return arr;
    }
  }
  throw bad();
}

void assign(Config& c, const Key& k, const json& v) {
  auto bad = [&] { return Error(ErrorCode::ConfigError, std::string("config key '") + k.name + "' has the wrong type"); };
  std::string name = k.name;
  if (v.is_null()) return;
  switch (k.kind) {
    case Key::Bool:
      if (!v.is_boolean()) throw bad();
      break;
    case Key::Number:
      if (!v.is_number()) throw bad();
      break;
    case Key::Int:
      if (!v.is_number_integer()) throw bad();
      break;
    case Key::String:
      if (!v.is_string()) throw bad();
      break;
    case Key::List:
      if (v.is_string()) {
        assign(c, k, parse_env_value(k, v.get<std::string>()));
        return;
      }
      if (!v.is_array()) throw bad();
      for (const auto& e : v) {
        if (!e.is_string()) throw bad();
      }
      break;
  }
  if (name == "replay") c.replay = v.get<bool>();
  else if (name == "threshold") c.threshold = v.get<double>();
  else if (name == "k") c.k = v.get<int>();
  else if (name == "types") c.types = v.get<std::set<std::string>>();
  else if (name == "languages") c.languages = v.get<std::vector<std::string>>();
  else if (name == "scholar_url") c.scholar_url = v.get<std::string>();
  else if (name == "scholar_api_key") c.scholar_api_key = v.get<std::string>();
  else if (name == "scholar_rps") c.scholar_rps = v.get<double>();
  else if (name == "llm_endpoint") c.llm_endpoint = v.get<std::string>();
  else if (name == "llm_model") c.llm_model = v.get<std::string>();
  else if (name == "llm_api_key") c.llm_api_key = v.get<std::string>();
  else if (name == "llm_fallback") c.llm_fallback = v.get<bool>();
  else if (name == "host") c.host = v.get<std::string>();
  else if (name == "port") c.port = v.get<int>();
  else if (name == "token") c.token = v.get<std::string>();
  else if (name == "static_dir") c.static_dir = v.get<std::string>();
  else if (name == "workers") c.workers = v.get<int>();
  else if (name == "probe_timeout_s") c.probe_timeout_s = v.get<int>();
  else if (name == "max_in_flight") c.max_in_flight = v.get<int>();
  else if (name == "per_host") c.per_host = v.get<int>();
  else if (name == "annotator") c.annotator = v.get<std::string>();
  else if (name == "force") c.force = v.get<bool>();
}

}  // namespace

ConfigLayer env_layer(const EnvLookup& env) {
  json layer = json::object();
  for (const auto& k : kKeys) {
    if (auto v = env(k.env)) layer[k.name] = parse_env_value(k, *v);
  }
  return layer;
}

ConfigLayer file_layer(const fs::path& path) {
  if (!files::exists(path)) return json::object();
  try {
    auto j = json::parse(files::read_text(path));
    if (!j.is_object()) throw Error(ErrorCode::ConfigError, path.string() + ": expected a JSON object");
    return j;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ConfigError, path.string() + ": " + e.what());
  }
}

Config resolve_config(const fs::path& workspace, const ConfigLayer& flags, const ConfigLayer& env,
                      const ConfigLayer& file) {
  Config c;
  c.workspace = workspace;
  for (const json* layer : {&file, &env, &flags}) {
    if (layer->is_null()) continue;
    if (!layer->is_object()) throw Error(ErrorCode::ConfigError, "config layer must be an object");
    for (const auto& [name, value] : layer->items()) {
      const Key* k = find_key(name);
      if (!k) throw Error(ErrorCode::ConfigError, "unknown config key '" + name + "'");
      assign(c, *k, value);
    }
  }
  if (c.threshold < 0) throw Error(ErrorCode::ConfigError, "threshold must be non-negative");
  if (c.k < 1) throw Error(ErrorCode::ConfigError, "k must be at least 1");
  if (c.workers < 1 || c.max_in_flight < 1 || c.per_host < 1) {
    throw Error(ErrorCode::ConfigError, "worker and concurrency limits must be at least 1");
  }
  if (c.port < 0 || c.port > 65535) throw Error(ErrorCode::ConfigError, "port out of range");
  if (c.scholar_rps <= 0) throw Error(ErrorCode::ConfigError, "scholar_rps must be positive");
  return c;
}

Config load_config(const fs::path& workspace, const ConfigLayer& flags, const EnvLookup& env) {
  Workspace ws(workspace);
  return resolve_config(workspace, flags, env_layer(env), file_layer(ws.config_file()));
}

Corpus load_corpus(const Workspace& ws) {
  if (!files::exists(ws.candidates())) {
    throw Error(ErrorCode::MissingPrerequisite, "no candidates at " + ws.candidates().string() + "; run discover first");
  }
  Corpus c;
  if (files::exists(ws.papers())) {
    for (const auto& j : parse_ndjson(files::read_text(ws.papers()))) {
      auto p = paper_from_json(j);
      c.papers.emplace(p.paper_id, std::move(p));
    }
  }
  std::map<std::string, ClassifierVerdict> verdicts;
  if (files::exists(ws.verdicts())) {
    for (const auto& j : parse_ndjson(files::read_text(ws.verdicts()))) {
      try {
        verdicts.emplace(j.at("mention_id").get<std::string>(), verdict_from_json(j.at("verdict")));
      } catch (const json::exception& e) {
        throw Error(ErrorCode::MalformedRecord, std::string("verdict record: ") + e.what());
      }
    }
  }
  for (const auto& j : parse_ndjson(files::read_text(ws.candidates()))) {
    auto m = candidate_from_record(j, c.papers);
    if (auto it = verdicts.find(m.mention_id); it != verdicts.end()) {
      m.verdict = it->second;
      if (it->second.is_dataset) m.extracted_name = it->second.extracted_name;
    }
    c.candidates.push_back(std::move(m));
  }
  return c;
}

}  // namespace rdiaudit::cli
