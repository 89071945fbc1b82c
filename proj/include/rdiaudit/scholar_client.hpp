#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "rdiaudit/http/http_client.hpp"
#include "rdiaudit/mention.hpp"

namespace rdiaudit::discovery {

using Sleeper = std::function<void(std::chrono::milliseconds)>;

/// Default sleeper: std::this_thread::sleep_for.
Sleeper real_sleeper();

/// Spaces request admissions at least `1/requests_per_second` apart across
/// every thread that shares the limiter. A rate <= 0 disables limiting.
class RateLimiter {
 public:
  explicit RateLimiter(double requests_per_second, Sleeper sleeper = real_sleeper());
  void acquire();
  long admitted() const;

 private:
  std::chrono::nanoseconds interval_;
  Sleeper sleeper_;
  mutable std::mutex mu_;
  std::chrono::steady_clock::time_point next_slot_{};
  long admitted_ = 0;
};

struct RetryPolicy {
  int max_attempts = 5;
  std::chrono::milliseconds base_delay{500};
  std::chrono::milliseconds max_delay{30000};
  double jitter = 0.25;  // +/- fraction applied to each computed delay
};

/// Delay before retry number `attempt` (1-based). A server hint wins over the
/// computed backoff.
std::chrono::milliseconds backoff_delay(const RetryPolicy& policy, int attempt, double unit_random,
                                        std::optional<std::chrono::milliseconds> server_hint);

/// Parses a Retry-After value given in seconds; HTTP dates are not supported.
std::optional<std::chrono::milliseconds> parse_retry_after(std::string_view value);

/// Content-addressed store of raw response bodies, one file per request key.
/// Writes are atomic so concurrent writers of the same key are harmless.
class ResponseCache {
 public:
  explicit ResponseCache(std::filesystem::path dir);

  static std::string key_for(std::string_view method, std::string_view target, std::string_view body = {});

  std::optional<std::string> get(std::string_view key) const;
  void put(std::string_view key, std::string_view request_line, std::string_view body) const;
  std::size_t size() const;
  const std::filesystem::path& dir() const { return dir_; }

 private:
  std::filesystem::path path_for(std::string_view key) const;
  std::filesystem::path dir_;
};

struct ScholarConfig {
  std::string base_url = "https://api.semanticscholar.org";
  std::optional<std::string> api_key;  // sent as x-api-key
  bool replay = false;                 // serve only from cache
  RetryPolicy retry;
  int page_size = 100;
  int max_citation_items = 1000;  // per direction per paper
  std::chrono::milliseconds timeout{30000};
  std::uint64_t jitter_seed = 0x5eed;
};

/// Client for a Semantic Scholar style graph API. Thread-safe.
class ScholarClient {
 public:
  /// `transport` may be null only in replay mode.
  ScholarClient(ScholarConfig config, std::shared_ptr<http::Transport> transport, std::shared_ptr<ResponseCache> cache,
                std::shared_ptr<RateLimiter> limiter = nullptr, Sleeper sleeper = real_sleeper());

  /// GET `target` (path + query, relative to base_url) and parse as JSON.
  nlohmann::json get_json(const std::string& target);

  /// Up to `k` papers in provider relevance order. Throws
  /// PreconditionViolation when k < 1.
  std::vector<PaperRef> search_papers(const std::string& query, int k);

  /// Outgoing reference contexts and incoming citation contexts of `paper`.
  /// Links without context text are skipped with one log line each.
  std::vector<CitationContext> expand_citations(const PaperRef& paper);

  long network_requests() const;
  long cache_hits() const;

 private:
  std::string fetch(const std::string& target);
  double next_unit_random();

  ScholarConfig config_;
  std::shared_ptr<http::Transport> transport_;
  std::shared_ptr<ResponseCache> cache_;
  std::shared_ptr<RateLimiter> limiter_;
  Sleeper sleeper_;
  std::mutex rng_mu_;
  std::mt19937_64 rng_;
  mutable std::mutex stats_mu_;
  long network_requests_ = 0;
  long cache_hits_ = 0;
};

/// PaperRef from an API paper object (`paperId`, `title`, `year`, ...).
/// Returns nullopt when the id is missing or null.
std::optional<PaperRef> paper_from_api(const nlohmann::json& j);

}  // namespace rdiaudit::discovery
