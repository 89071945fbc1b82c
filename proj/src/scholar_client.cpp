#include "rdiaudit/scholar_client.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <thread>

#include "rdiaudit/error.hpp"
#include "rdiaudit/util/digest.hpp"
#include "rdiaudit/util/files.hpp"
#include "rdiaudit/util/log.hpp"
#include "rdiaudit/util/text.hpp"

namespace rdiaudit::discovery {

using nlohmann::json;
namespace fs = std::filesystem;

Sleeper real_sleeper() {
  return [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
}

RateLimiter::RateLimiter(double requests_per_second, Sleeper sleeper) : sleeper_(std::move(sleeper)) {
  interval_ = requests_per_second > 0
                  ? std::chrono::nanoseconds(static_cast<long long>(1e9 / requests_per_second))
                  : std::chrono::nanoseconds(0);
}

void RateLimiter::acquire() {
  std::chrono::steady_clock::time_point slot;
  {
    std::lock_guard lock(mu_);
    ++admitted_;
    if (interval_.count() == 0) return;
    auto now = std::chrono::steady_clock::now();
    slot = std::max(now, next_slot_);
    next_slot_ = slot + interval_;
  }
  auto wait = slot - std::chrono::steady_clock::now();
  if (wait > std::chrono::nanoseconds(0)) {
    sleeper_(std::chrono::ceil<std::chrono::milliseconds>(wait));
  }
}

long RateLimiter::admitted() const {
  std::lock_guard lock(mu_);
  return admitted_;
}

std::chrono::milliseconds backoff_delay(const RetryPolicy& policy, int attempt, double unit_random,
                                        std::optional<std::chrono::milliseconds> server_hint) {
  if (server_hint) return std::min(*server_hint, std::chrono::milliseconds(120000));
  double base = static_cast<double>(policy.base_delay.count()) * std::pow(2.0, std::max(0, attempt - 1));
  base = std::min(base, static_cast<double>(policy.max_delay.count()));
  double factor = 1.0 + policy.jitter * (2.0 * unit_random - 1.0);
  return std::chrono::milliseconds(static_cast<long long>(std::max(0.0, base * factor)));
}

std::optional<std::chrono::milliseconds> parse_retry_after(std::string_view value) {
  value = text::trim(value);
  if (value.empty()) return std::nullopt;
  long secs = 0;
  auto [p, ec] = std::from_chars(value.data(), value.data() + value.size(), secs);
  if (ec != std::errc{} || p != value.data() + value.size() || secs < 0) return std::nullopt;
  return std::chrono::milliseconds(secs * 1000);
}

ResponseCache::ResponseCache(fs::path dir) : dir_(std::move(dir)) { fs::create_directories(dir_); }

std::string ResponseCache::key_for(std::string_view method, std::string_view target, std::string_view body) {
  return sha256_hex(std::string(method) + " " + std::string(target) + "\n" + std::string(body));
}

fs::path ResponseCache::path_for(std::string_view key) const {
  return dir_ / std::string(key.substr(0, 2)) / (std::string(key) + ".json");
}

std::optional<std::string> ResponseCache::get(std::string_view key) const {
  auto p = path_for(key);
  if (!files::exists(p)) return std::nullopt;
  try {
    auto j = json::parse(files::read_text(p));
    return j.at("body").get<std::string>();
  } catch (const json::exception& e) {
    log::warn("ignoring unreadable cache entry " + p.string() + ": " + e.what());
    return std::nullopt;
  }
}

void ResponseCache::put(std::string_view key, std::string_view request_line, std::string_view body) const {
  auto p = path_for(key);
  fs::create_directories(p.parent_path());
  json j = {{"request", request_line}, {"body", body}};
  files::write_atomic(p, j.dump() + "\n");
}

std::size_t ResponseCache::size() const {
  std::size_t n = 0;
  if (!fs::exists(dir_)) return 0;
  for (const auto& e : fs::recursive_directory_iterator(dir_)) {
    if (e.is_regular_file() && e.path().extension() == ".json") ++n;
  }
  return n;
}

ScholarClient::ScholarClient(ScholarConfig config, std::shared_ptr<http::Transport> transport,
                             std::shared_ptr<ResponseCache> cache, std::shared_ptr<RateLimiter> limiter,
                             Sleeper sleeper)
    : config_(std::move(config)),
      transport_(std::move(transport)),
      cache_(std::move(cache)),
      limiter_(std::move(limiter)),
      sleeper_(std::move(sleeper)),
      rng_(config_.jitter_seed) {
  if (!config_.replay && !transport_) {
    throw Error(ErrorCode::ConfigError, "scholar client needs a transport outside replay mode");
  }
  if (config_.replay && !cache_) throw Error(ErrorCode::ConfigError, "replay mode needs a response cache");
  while (!config_.base_url.empty() && config_.base_url.back() == '/') config_.base_url.pop_back();
}

double ScholarClient::next_unit_random() {
  std::lock_guard lock(rng_mu_);
  return std::uniform_real_distribution<double>(0.0, 1.0)(rng_);
}

long ScholarClient::network_requests() const {
  std::lock_guard lock(stats_mu_);
  return network_requests_;
}

long ScholarClient::cache_hits() const {
  std::lock_guard lock(stats_mu_);
  return cache_hits_;
}

std::string ScholarClient::fetch(const std::string& target) {
  auto key = ResponseCache::key_for("GET", target);
  if (cache_) {
    if (auto hit = cache_->get(key)) {
      std::lock_guard lock(stats_mu_);
      ++cache_hits_;
      return *hit;
    }
  }
  if (config_.replay) throw Error(ErrorCode::ReplayMiss, "no cached response for GET " + target);

  http::Request req;
  req.url = config_.base_url + target;
  req.read_timeout = config_.timeout;
  req.headers.emplace_back("Accept", "application/json");
  if (config_.api_key) req.headers.emplace_back("x-api-key", *config_.api_key);

  std::optional<std::chrono::milliseconds> last_hint;
  std::string last_problem;
  bool last_was_rate_limit = false;
  for (int attempt = 1; attempt <= config_.retry.max_attempts; ++attempt) {
    if (limiter_) limiter_->acquire();
    {
      std::lock_guard lock(stats_mu_);
      ++network_requests_;
    }
    auto outcome = transport_->send(req);
    last_hint.reset();
    last_was_rate_limit = false;
    if (!outcome.ok()) {
      last_problem = std::string(http::to_string(outcome.failure)) + ": " + outcome.detail;
    } else {
      const auto& r = *outcome.response;
      if (r.status == 200) {
        if (cache_) cache_->put(key, "GET " + target, r.body);
        return r.body;
      }
      if (r.status == 429 || r.status >= 500) {
        last_was_rate_limit = r.status == 429;
        if (auto h = r.header("Retry-After")) last_hint = parse_retry_after(*h);
        last_problem = "HTTP " + std::to_string(r.status);
      } else {
        throw Error(ErrorCode::TransportFailure, "GET " + target + " returned HTTP " + std::to_string(r.status));
      }
    }
    if (attempt < config_.retry.max_attempts) {
      auto delay = backoff_delay(config_.retry, attempt, next_unit_random(), last_hint);
      log::debug("retrying GET " + target + " after " + last_problem + " in " + std::to_string(delay.count()) + " ms");
      sleeper_(delay);
    }
  }
  if (last_was_rate_limit) {
    std::string hint = last_hint ? " (retry after " + std::to_string(last_hint->count() / 1000) + " s)" : "";
    throw Error(ErrorCode::RateLimited, "GET " + target + " still rate limited after " +
                                            std::to_string(config_.retry.max_attempts) + " attempts" + hint);
  }
  throw Error(ErrorCode::TransportFailure, "GET " + target + " failed after " +
                                               std::to_string(config_.retry.max_attempts) +
                                               " attempts: " + last_problem);
}

json ScholarClient::get_json(const std::string& target) {
  auto body = fetch(target);
  try {
    return json::parse(body);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::MalformedResponse, "GET " + target + ": " + e.what());
  }
}

std::optional<PaperRef> paper_from_api(const json& j) {
  if (!j.is_object()) return std::nullopt;
  auto id = j.find("paperId");
  if (id == j.end() || !id->is_string() || id->get<std::string>().empty()) return std::nullopt;
  PaperRef p;
  p.paper_id = id->get<std::string>();
  if (auto t = j.find("title"); t != j.end() && t->is_string()) p.title = t->get<std::string>();
  if (auto y = j.find("year"); y != j.end() && y->is_number_integer()) p.year = y->get<int>();
  if (auto v = j.find("venue"); v != j.end() && v->is_string() && !v->get<std::string>().empty()) {
    p.venue = v->get<std::string>();
  }
  if (auto a = j.find("abstract"); a != j.end() && a->is_string() && !a->get<std::string>().empty()) {
    p.abstract = a->get<std::string>();
  }
  return p;
}

namespace {

const json& require_array(const json& page, const char* field, const std::string& target) {
  auto it = page.find(field);
  if (!page.is_object() || it == page.end() || !it->is_array()) {
    throw Error(ErrorCode::MalformedResponse, "GET " + target + ": missing '" + field + "' array");
  }
  return *it;
}

std::optional<int> next_offset(const json& page) {
  auto it = page.find("next");
  if (it == page.end() || !it->is_number_integer()) return std::nullopt;
  return it->get<int>();
}

}  // namespace

std::vector<PaperRef> ScholarClient::search_papers(const std::string& query, int k) {
  if (k < 1) throw Error(ErrorCode::PreconditionViolation, "k must be at least 1");
  std::vector<PaperRef> out;
  int offset = 0;
  while (static_cast<int>(out.size()) < k) {
    int limit = std::min(config_.page_size, k - static_cast<int>(out.size()));
    std::string target = "/graph/v1/paper/search?query=" + http::url_encode(query) +
                         "&offset=" + std::to_string(offset) + "&limit=" + std::to_string(limit) +
                         "&fields=title,year,venue,abstract";
    auto page = get_json(target);
    const auto& data = require_array(page, "data", target);
    for (const auto& item : data) {
      if (static_cast<int>(out.size()) == k) break;
      if (auto p = paper_from_api(item)) {
        out.push_back(std::move(*p));
      } else {
        throw Error(ErrorCode::MalformedResponse, "GET " + target + ": search result without paperId");
      }
    }
    auto next = next_offset(page);
    if (!next || data.empty() || *next <= offset) break;
    offset = *next;
  }
  return out;
}

std::vector<CitationContext> ScholarClient::expand_citations(const PaperRef& paper) {
  std::vector<CitationContext> out;
  struct Pass {
    const char* edge;
    const char* other;
    Direction direction;
  };
  const Pass passes[] = {{"references", "citedPaper", Direction::Outgoing},
                         {"citations", "citingPaper", Direction::Incoming}};
  for (const auto& pass : passes) {
    int offset = 0;
    int seen = 0;
    while (seen < config_.max_citation_items) {
      int limit = std::min(config_.page_size, config_.max_citation_items - seen);
      std::string target = "/graph/v1/paper/" + http::url_encode(paper.paper_id) + "/" + pass.edge +
                           "?offset=" + std::to_string(offset) + "&limit=" + std::to_string(limit) +
                           "&fields=contexts,title,year,venue";
      auto page = get_json(target);
      const auto& data = require_array(page, "data", target);
      for (const auto& item : data) {
        ++seen;
        auto other = paper_from_api(item.value(pass.other, json()));
        if (!other || other->paper_id == paper.paper_id) continue;
        std::vector<std::string> texts;
        if (auto c = item.find("contexts"); c != item.end() && c->is_array()) {
          for (const auto& t : *c) {
            if (t.is_string() && !text::trim(t.get<std::string>()).empty()) texts.push_back(t.get<std::string>());
          }
        }
        if (texts.empty()) {
          log::info("skipping " + std::string(pass.edge) + " link " + paper.paper_id + " -> " + other->paper_id +
                    ": no context text");
          continue;
        }
        for (auto& t : texts) {
          CitationContext ctx;
          if (pass.direction == Direction::Outgoing) {
            ctx.citing = paper;
            ctx.cited = *other;
          } else {
            ctx.citing = *other;
            ctx.cited = paper;
          }
          ctx.context_text = std::move(t);
          ctx.direction = pass.direction;
          out.push_back(std::move(ctx));
        }
      }
      auto next = next_offset(page);
      if (!next || data.empty() || *next <= offset) break;
      offset = *next;
    }
  }
  return out;
}

}  // namespace rdiaudit::discovery
