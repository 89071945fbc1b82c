#pragma once

#include <chrono>
#include <future>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "rdiaudit/error.hpp"
#include "rdiaudit/http/http_client.hpp"
#include "rdiaudit/mention.hpp"

namespace rdiaudit::classify {

struct BackendConfig {
  std::string endpoint;  // chat-completions URL; empty selects the heuristic backend
  std::string model = "Qwen2.5-72B";
  std::string template_id = "mention_v1";
  double temperature = 0.0;
  std::chrono::milliseconds timeout{60000};
  std::optional<std::string> api_key;  // sent as a bearer token
  int max_in_flight = 4;
  bool fallback = true;  // heuristic verdict when the endpoint is down or slow
};

/// Throws ConfigError for a negative temperature, a malformed endpoint or an
/// unknown template id.
void validate(const BackendConfig& config);

/// Built-in prompt templates compiled from prompts/*.txt.
std::optional<std::string_view> prompt_template(std::string_view id);

/// Substitutes {{language}}, {{citing_title}}, {{cited_title}}, {{context}}.
std::string render_prompt(std::string_view tmpl, const CitationContext& ctx, std::string_view language_name);

/// Rule-based verdict, a pure function of the context text. Denylisted
/// artifact cues (toolkit, library, metric, model, ...) win over dataset cues.
ClassifierVerdict heuristic_verdict(std::string_view context_text);

/// Parses a model answer: one JSON object, optionally inside a single
/// ``` fence, with keys verdict/name/rationale/confidence only. Anything
/// else throws SchemaViolation carrying the raw output.
ClassifierVerdict parse_llm_answer(std::string_view raw, std::string_view context_digest);

/// Probability-like score that the mention is a genuine dataset, used for
/// queue ordering: confidence for positive verdicts, 1 - confidence otherwise.
double dataset_score(const ClassifierVerdict& v);

/// Verdicts keyed by (template, backend/model, rendered-prompt digest).
/// Concurrent requests for the same key share one computation.
class VerdictCache {
 public:
  static std::string key(std::string_view template_id, std::string_view model, std::string_view prompt);

  std::optional<ClassifierVerdict> get(const std::string& key) const;
  void put(const std::string& key, const ClassifierVerdict& v);

  /// Either returns the cached value, waits for an in-flight computation of
  /// the same key, or runs `compute` (exactly once per key at a time).
  template <class F>
  ClassifierVerdict get_or_compute(const std::string& key, F&& compute);

  std::string to_ndjson() const;
  void load_ndjson(std::string_view text);
  std::size_t size() const;

 private:
  mutable std::mutex mu_;
  std::map<std::string, ClassifierVerdict> done_;
  std::map<std::string, std::shared_future<ClassifierVerdict>> in_flight_;
};

class Classifier {
 public:
  Classifier(BackendConfig config, std::shared_ptr<http::Transport> transport,
             std::shared_ptr<VerdictCache> cache = std::make_shared<VerdictCache>());

  /// Throws PreconditionViolation (empty context), EndpointUnavailable,
  /// SchemaViolation or Timeout. With `fallback` set, endpoint failures and
  /// timeouts yield a HEURISTIC verdict instead.
  ClassifierVerdict classify_context(const CitationContext& ctx, std::string_view language_name);

  long remote_calls() const;
  const BackendConfig& config() const { return config_; }
  VerdictCache& cache() { return *cache_; }

 private:
  ClassifierVerdict call_endpoint(const std::string& prompt, const std::string& digest);

  BackendConfig config_;
  std::string template_;
  std::shared_ptr<http::Transport> transport_;
  std::shared_ptr<VerdictCache> cache_;
  mutable std::mutex mu_;
  long remote_calls_ = 0;
};

struct BatchItem {
  std::string mention_id;
  std::optional<ClassifierVerdict> verdict;
  std::optional<ErrorCode> error;
  std::string error_message;
};

struct BatchResult {
  std::vector<BatchItem> items;  // same order as the input
  long failures = 0;
};

using LanguageNames = std::map<std::string, std::string, std::less<>>;

/// Classifies every mention, setting `verdict` and `extracted_name` on
/// success. One failure never aborts the batch.
BatchResult classify_batch(Classifier& classifier, std::vector<CandidateMention>& mentions,
                           const LanguageNames& language_names);

// --- implementation ---------------------------------------------------------

template <class F>
ClassifierVerdict VerdictCache::get_or_compute(const std::string& key, F&& compute) {
  std::promise<ClassifierVerdict> promise;
  std::shared_future<ClassifierVerdict> waiter;
  {
    std::lock_guard lock(mu_);
    if (auto it = done_.find(key); it != done_.end()) return it->second;
    if (auto it = in_flight_.find(key); it != in_flight_.end()) {
      waiter = it->second;
    } else {
      in_flight_.emplace(key, promise.get_future().share());
    }
  }
  if (waiter.valid()) return waiter.get();
  try {
    auto v = compute();
    {
      std::lock_guard lock(mu_);
      done_[key] = v;
      in_flight_.erase(key);
    }
    promise.set_value(v);
    return v;
  } catch (...) {
    {
      std::lock_guard lock(mu_);
      in_flight_.erase(key);
    }
    promise.set_exception(std::current_exception());
    throw;
  }
}

}  // namespace rdiaudit::classify
