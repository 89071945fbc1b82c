#include "rdiaudit/classifier.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <thread>

#include <json.hpp>

#include "rdiaudit/util/digest.hpp"
#include "rdiaudit/util/log.hpp"
#include "rdiaudit/util/text.hpp"

namespace rdiaudit::classify {

using nlohmann::json;

namespace {

constexpr std::string_view kHeuristicModel = "heuristic-v1";

// Artifact classes the task excludes. Checked first.
const std::vector<std::string_view> kDenyCues = {
    "toolkit",   "toolkits",  "library",   "libraries", "metric",     "metrics",  "model",
    "models",    "software",  "tokenizer", "tokenizers", "parser of", "embeddings", "word vectors",
    "pretrained", "pre-trained", "script",  "scripts",   "api",        "textbook", "book",
    "grammar of", "survey",
};

const std::vector<std::string_view> kDatasetCues = {
    "corpus of",   "dataset for",  "annotated by", "corpus",     "corpora",     "dataset",  "datasets",
    "data set",    "treebank",     "benchmark",    "annotated",  "speech corpus", "lexicon", "test set",
    "training data", "collection of", "released by", "we evaluate on", "parallel text", "recordings",
};

const std::vector<std::string_view> kNameHeads = {"corpus", "dataset", "treebank", "benchmark", "lexicon",
                                                  "collection", "bank", "data"};

bool starts_upper_or_digit(std::string_view w) {
  if (w.empty()) return false;
  auto c = static_cast<unsigned char>(w.front());
  return std::isupper(c) || std::isdigit(c) || c >= 0x80;
}

std::string strip_punct(std::string_view w) {
  while (!w.empty() && std::ispunct(static_cast<unsigned char>(w.front())) && w.front() != '-') w.remove_prefix(1);
  while (!w.empty() && std::ispunct(static_cast<unsigned char>(w.back())) && w.back() != '-') w.remove_suffix(1);
  return std::string(w);
}

// Capitalized run ending in a name head ("the Setswana NER Dataset 3"),
// with a trailing number kept.
std::optional<std::string> extract_name(std::string_view context) {
  std::vector<std::string> words;
  for (const auto& raw : text::split(context, ' ')) {
    // Citation markers ("[33],") end a name run and are never its number.
    if (!raw.empty() && (raw.front() == '[' || raw.front() == '(')) {
      words.push_back(raw);
      continue;
    }
    auto w = strip_punct(raw);
    if (!w.empty()) words.push_back(w);
  }
  for (std::size_t i = 0; i < words.size(); ++i) {
    auto folded = text::casefold(words[i]);
    bool head = std::find(kNameHeads.begin(), kNameHeads.end(), folded) != kNameHeads.end();
    if (!head) continue;
    std::size_t start = i;
    while (start > 0 && starts_upper_or_digit(words[start - 1])) --start;
    if (start == i && !starts_upper_or_digit(words[i])) continue;
    std::size_t end = i + 1;
    if (end < words.size() && std::all_of(words[end].begin(), words[end].end(),
                                          [](char c) { return std::isdigit(static_cast<unsigned char>(c)); })) {
      ++end;
    }
    std::vector<std::string> parts(words.begin() + static_cast<long>(start), words.begin() + static_cast<long>(end));
    return text::join(parts, " ");
  }
  return std::nullopt;
}

std::string replace_all(std::string s, std::string_view from, std::string_view to) {
  std::size_t pos = 0;
  while ((pos = s.find(from, pos)) != std::string::npos) {
    s.replace(pos, from.size(), to);
    pos += to.size();
  }
  return s;
}

}  // namespace

void validate(const BackendConfig& config) {
  if (config.temperature < 0) throw Error(ErrorCode::ConfigError, "temperature must be >= 0");
  if (!config.endpoint.empty() && !http::parse_url(config.endpoint)) {
    throw Error(ErrorCode::ConfigError, "classifier endpoint is not an absolute http(s) url: " + config.endpoint);
  }
  if (!prompt_template(config.template_id)) {
    throw Error(ErrorCode::ConfigError, "unknown prompt template " + config.template_id);
  }
  if (config.max_in_flight < 1) throw Error(ErrorCode::ConfigError, "max_in_flight must be >= 1");
}

std::string render_prompt(std::string_view tmpl, const CitationContext& ctx, std::string_view language_name) {
  auto out = replace_all(std::string(tmpl), "{{language}}", language_name);
  out = replace_all(out, "{{citing_title}}", ctx.citing.title);
  out = replace_all(out, "{{cited_title}}", ctx.cited.title);
  return replace_all(out, "{{context}}", ctx.context_text);
}

ClassifierVerdict heuristic_verdict(std::string_view context_text) {
  ClassifierVerdict v;
  v.backend = Backend::Heuristic;
  v.context_digest = context_digest(context_text);
  auto folded = text::casefold(context_text);

  for (auto cue : kDenyCues) {
    if (text::contains_word(folded, cue)) {
      v.is_dataset = false;
      v.rationale = "artifact cue '" + std::string(cue) + "'";
      v.confidence = 0.7;
      return v;
    }
  }
  int hits = 0;
  std::string first;
  for (auto cue : kDatasetCues) {
    if (text::contains_word(folded, cue)) {
      if (hits++ == 0) first = cue;
    }
  }
  if (hits == 0) {
    v.is_dataset = false;
    v.rationale = "no dataset cue";
    v.confidence = 0.6;
    return v;
  }
  v.is_dataset = true;
  v.extracted_name = extract_name(context_text);
  v.rationale = "dataset cue '" + first + "'";
  v.confidence = std::min(0.9, 0.5 + 0.1 * hits);
  return v;
}

ClassifierVerdict parse_llm_answer(std::string_view raw, std::string_view digest) {
  auto fail = [&](const std::string& why) {
    return Error(ErrorCode::SchemaViolation, why + "; raw output: " + std::string(raw));
  };
  auto body = text::trim(raw);
  if (body.starts_with("```")) {
    auto first_nl = body.find('\n');
    auto close = body.rfind("```");
    if (first_nl == std::string_view::npos || close <= first_nl) throw fail("unterminated code fence");
    auto lang = text::trim(body.substr(3, first_nl - 3));
    if (!lang.empty() && lang != "json") throw fail("unexpected fence language");
    if (!text::trim(body.substr(close + 3)).empty()) throw fail("text after code fence");
    body = text::trim(body.substr(first_nl + 1, close - first_nl - 1));
  }
  json j;
  try {
    j = json::parse(body);
  } catch (const json::parse_error&) {
    throw fail("answer is not JSON");
  }
  if (!j.is_object()) throw fail("answer is not a JSON object");
  for (const auto& [k, _] : j.items()) {
    if (k != "verdict" && k != "name" && k != "rationale" && k != "confidence") throw fail("unexpected key '" + k + "'");
  }
  auto verdict = j.find("verdict");
  if (verdict == j.end() || !verdict->is_string()) throw fail("missing verdict");
  ClassifierVerdict v;
  v.backend = Backend::Llm;
  v.context_digest = std::string(digest);
  if (*verdict == "DATASET") {
    v.is_dataset = true;
  } else if (*verdict == "NOT_DATASET") {
    v.is_dataset = false;
  } else {
    throw fail("verdict must be DATASET or NOT_DATASET");
  }
  if (auto n = j.find("name"); n != j.end() && !n->is_null()) {
    if (!n->is_string()) throw fail("name must be a string or null");
    auto name = std::string(text::trim(n->get<std::string>()));
    if (v.is_dataset && !name.empty()) v.extracted_name = name;
  }
  if (auto r = j.find("rationale"); r != j.end() && !r->is_null()) {
    if (!r->is_string()) throw fail("rationale must be a string");
    v.rationale = r->get<std::string>();
  }
  if (auto c = j.find("confidence"); c != j.end() && !c->is_null()) {
    if (!c->is_number()) throw fail("confidence must be a number");
    double x = c->get<double>();
    if (x < 0 || x > 1) throw fail("confidence outside [0, 1]");
    v.confidence = x;
  }
  return v;
}

double dataset_score(const ClassifierVerdict& v) {
  double c = v.confidence.value_or(0.5);
  return v.is_dataset ? c : 1.0 - c;
}

std::string VerdictCache::key(std::string_view template_id, std::string_view model, std::string_view prompt) {
  return short_digest({template_id, model, sha256_hex(prompt)}, 32);
}

std::optional<ClassifierVerdict> VerdictCache::get(const std::string& key) const {
  std::lock_guard lock(mu_);
  auto it = done_.find(key);
  if (it == done_.end()) return std::nullopt;
  return it->second;
}

void VerdictCache::put(const std::string& key, const ClassifierVerdict& v) {
  std::lock_guard lock(mu_);
  done_[key] = v;
}

std::string VerdictCache::to_ndjson() const {
  std::lock_guard lock(mu_);
  std::string out;
  for (const auto& [k, v] : done_) out += json{{"key", k}, {"verdict", verdict_to_json(v)}}.dump() + "\n";
  return out;
}

void VerdictCache::load_ndjson(std::string_view text_in) {
  auto records = parse_ndjson(text_in);
  std::lock_guard lock(mu_);
  for (const auto& r : records) {
    try {
      done_[r.at("key").get<std::string>()] = verdict_from_json(r.at("verdict"));
    } catch (const json::exception& e) {
      throw Error(ErrorCode::MalformedRecord, std::string("verdict cache: ") + e.what());
    }
  }
}

std::size_t VerdictCache::size() const {
  std::lock_guard lock(mu_);
  return done_.size();
}

Classifier::Classifier(BackendConfig config, std::shared_ptr<http::Transport> transport,
                       std::shared_ptr<VerdictCache> cache)
    : config_(std::move(config)), transport_(std::move(transport)), cache_(std::move(cache)) {
  validate(config_);
  template_ = std::string(*prompt_template(config_.template_id));
  if (!config_.endpoint.empty() && !transport_) throw Error(ErrorCode::ConfigError, "LLM backend needs a transport");
}

long Classifier::remote_calls() const {
  std::lock_guard lock(mu_);
  return remote_calls_;
}

ClassifierVerdict Classifier::call_endpoint(const std::string& prompt, const std::string& digest) {
  {
    std::lock_guard lock(mu_);
    ++remote_calls_;
  }
  json body = {{"model", config_.model},
               {"temperature", config_.temperature},
               {"messages", json::array({{{"role", "user"}, {"content", prompt}}})}};
  http::Request req;
  req.method = "POST";
  req.url = config_.endpoint;
  req.body = body.dump();
  req.content_type = "application/json";
  req.read_timeout = config_.timeout;
  req.connect_timeout = std::min(config_.timeout, std::chrono::milliseconds(10000));
  if (config_.api_key) req.headers.emplace_back("Authorization", "Bearer " + *config_.api_key);

  auto outcome = transport_->send(req);
  if (!outcome.ok()) {
    if (outcome.failure == http::Failure::Timeout) {
      throw Error(ErrorCode::Timeout, "classifier endpoint timed out: " + outcome.detail);
    }
    throw Error(ErrorCode::EndpointUnavailable, "classifier endpoint unreachable: " + outcome.detail);
  }
  const auto& r = *outcome.response;
  if (r.status != 200) {
    throw Error(ErrorCode::EndpointUnavailable, "classifier endpoint returned HTTP " + std::to_string(r.status));
  }
  std::string content;
  try {
    auto j = json::parse(r.body);
    content = j.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::SchemaViolation, std::string("malformed completion envelope: ") + e.what() +
                                                "; raw output: " + r.body);
  }
  return parse_llm_answer(content, digest);
}

ClassifierVerdict Classifier::classify_context(const CitationContext& ctx, std::string_view language_name) {
  if (text::trim(ctx.context_text).empty()) {
    throw Error(ErrorCode::PreconditionViolation, "citation context is empty");
  }
  auto digest = context_digest(ctx.context_text);
  auto heuristic = [&] {
    auto key = VerdictCache::key(config_.template_id, kHeuristicModel, ctx.context_text);
    return cache_->get_or_compute(key, [&] { return heuristic_verdict(ctx.context_text); });
  };
  if (config_.endpoint.empty()) return heuristic();

  auto prompt = render_prompt(template_, ctx, language_name);
  auto key = VerdictCache::key(config_.template_id, config_.model, prompt);
  try {
    return cache_->get_or_compute(key, [&] { return call_endpoint(prompt, digest); });
  } catch (const Error& e) {
    bool degraded = e.code() == ErrorCode::EndpointUnavailable || e.code() == ErrorCode::Timeout;
    if (!degraded || !config_.fallback) throw;
    log::warn(std::string("falling back to heuristic verdict: ") + e.what());
    return heuristic();
  }
}

BatchResult classify_batch(Classifier& classifier, std::vector<CandidateMention>& mentions,
                           const LanguageNames& language_names) {
  BatchResult result;
  result.items.resize(mentions.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < mentions.size(); i = next++) {
      auto& m = mentions[i];
      auto& item = result.items[i];
      item.mention_id = m.mention_id;
      auto name_it = language_names.find(m.language);
      std::string_view name = name_it == language_names.end() ? std::string_view(m.language) : name_it->second;
      try {
        item.verdict = classifier.classify_context(m.context, name);
      } catch (const Error& e) {
        item.error = e.code();
        item.error_message = e.what();
      }
    }
  };
  int n = std::clamp(classifier.config().endpoint.empty() ? 1 : classifier.config().max_in_flight, 1,
                     std::max(1, static_cast<int>(mentions.size())));
  std::vector<std::thread> pool;
  for (int w = 1; w < n; ++w) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  for (std::size_t i = 0; i < mentions.size(); ++i) {
    auto& item = result.items[i];
    if (item.verdict) {
      mentions[i].verdict = item.verdict;
      mentions[i].extracted_name = item.verdict->extracted_name;
    } else {
      ++result.failures;
      log::error("classify " + item.mention_id + ": " + item.error_message);
    }
  }
  return result;
}

}  // namespace rdiaudit::classify
