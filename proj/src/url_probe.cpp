#include "rdiaudit/url_probe.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <thread>

#include "rdiaudit/error.hpp"
#include "rdiaudit/util/text.hpp"
#include "rdiaudit/util/timefmt.hpp"

namespace rdiaudit::audit {

void HostLimiter::acquire(const std::string& host_key) {
  std::unique_lock lock(mu_);
  cv_.wait(lock, [&] { return in_flight_[host_key] < per_host_; });
  int n = ++in_flight_[host_key];
  max_observed_ = std::max(max_observed_, n);
}

void HostLimiter::release(const std::string& host_key) {
  {
    std::lock_guard lock(mu_);
    if (--in_flight_[host_key] <= 0) in_flight_.erase(host_key);
  }
  cv_.notify_all();
}

int HostLimiter::max_observed() const {
  std::lock_guard lock(mu_);
  return max_observed_;
}

namespace {

const std::vector<std::string_view> kFileTypes = {
    "application/zip",     "application/x-zip-compressed", "application/gzip",  "application/x-gzip",
    "application/x-tar",   "application/x-bzip2",          "application/x-xz",  "application/x-7z-compressed",
    "application/octet-stream", "text/csv",                "text/tab-separated-values", "application/x-rar-compressed",
    "audio/",              "application/vnd.rar",
};

const std::vector<std::string_view> kFileExtensions = {".zip", ".gz",  ".tgz",   ".tar",   ".bz2",  ".xz",  ".7z",
                                                       ".csv", ".tsv", ".jsonl", ".conll", ".conllu", ".txt", ".wav",
                                                       ".flac", ".rar"};

std::string host_key(const http::Url& u) { return u.host + ":" + std::to_string(u.port); }

bool looks_like_login(std::string_view folded_body) {
  return folded_body.find("type=\"password\"") != std::string_view::npos ||
         folded_body.find("type='password'") != std::string_view::npos ||
         folded_body.find("type=password") != std::string_view::npos;
}

}  // namespace

ContentKind sniff_content_kind(const http::Response& response, const http::Url& final_url) {
  if (response.header("WWW-Authenticate")) return ContentKind::Gated;
  if (auto cd = response.header("Content-Disposition"); cd && text::casefold(*cd).find("attachment") != std::string::npos) {
    return ContentKind::File;
  }
  auto type = text::casefold(response.header("Content-Type").value_or(""));
  auto body = text::casefold(response.body);
  if (type.starts_with("text/html") || type.starts_with("application/xhtml")) {
    return looks_like_login(body) ? ContentKind::Gated : ContentKind::Page;
  }
  for (auto t : kFileTypes) {
    if (type.starts_with(t)) return ContentKind::File;
  }
  auto path = text::casefold(final_url.target.substr(0, final_url.target.find('?')));
  for (auto ext : kFileExtensions) {
    if (path.ends_with(ext)) return ContentKind::File;
  }
  if (type.empty() && (body.find("<html") != std::string::npos || body.find("<!doctype html") != std::string::npos)) {
    return looks_like_login(body) ? ContentKind::Gated : ContentKind::Page;
  }
  return ContentKind::Unknown;
}

UrlProbe probe_url(http::Transport& transport, const std::string& url, const ProbePolicy& policy,
                   HostLimiter* limiter) {
  auto parsed = http::parse_url(url);
  if (!parsed) throw Error(ErrorCode::InvalidUrl, "not an absolute http(s) url: " + url);

  UrlProbe probe;
  probe.url = url;
  probe.probed_at = policy.clock ? policy.clock() : utc_now_iso8601();
  http::Url current = *parsed;

  for (;;) {
    probe.final_url = current.str();
    http::Request req;
    req.url = current.str();
    req.connect_timeout = policy.connect_timeout;
    req.read_timeout = policy.read_timeout;
    req.max_body_bytes = policy.max_body_bytes;
    req.headers.emplace_back("User-Agent", policy.user_agent);

    auto key = host_key(current);
    if (limiter) limiter->acquire(key);
    http::Outcome outcome;
    try {
      outcome = transport.send(req);
    } catch (...) {
      if (limiter) limiter->release(key);
      throw;
    }
    if (limiter) limiter->release(key);

    if (!outcome.ok()) {
      switch (outcome.failure) {
        case http::Failure::Timeout: probe.outcome = ProbeOutcome::Timeout; break;
        case http::Failure::Tls: probe.outcome = ProbeOutcome::TlsFailure; break;
        default: probe.outcome = ProbeOutcome::Dead;
      }
      probe.detail = outcome.detail;
      return probe;
    }

    const auto& r = *outcome.response;
    probe.http_status = r.status;
    if (r.status >= 300 && r.status < 400) {
      auto loc = r.header("Location");
      auto next = loc ? http::resolve_location(current, *loc) : std::nullopt;
      if (!next) {
        probe.outcome = ProbeOutcome::Dead;
        probe.detail = "redirect without a usable Location";
        return probe;
      }
      if (probe.redirects >= policy.max_redirects) {
        probe.outcome = ProbeOutcome::Dead;
        probe.detail = "more than " + std::to_string(policy.max_redirects) + " redirects";
        return probe;
      }
      if (current.scheme == "https" && next->scheme == "http") {
        probe.outcome = ProbeOutcome::TlsFailure;
        probe.final_url = next->str();
        probe.detail = "redirect downgrades https to http";
        return probe;
      }
      ++probe.redirects;
      current = *next;
      continue;
    }
    probe.content_kind = sniff_content_kind(r, current);
    if (r.status >= 200 && r.status < 300) {
      probe.outcome = ProbeOutcome::Resolved;
    } else {
      probe.outcome = ProbeOutcome::Dead;
      probe.detail = "HTTP " + std::to_string(r.status);
    }
    return probe;
  }
}

std::vector<UrlProbe> probe_all(http::Transport& transport, const std::vector<ProbeJob>& jobs,
                                const ProbePolicy& policy, int max_in_flight, int per_host,
                                const std::function<void(const UrlProbe&)>& on_result) {
  std::vector<UrlProbe> out(jobs.size());
  HostLimiter limiter(per_host);
  std::mutex result_mu;
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < jobs.size(); i = next++) {
      try {
        out[i] = probe_url(transport, jobs[i].url, policy, &limiter);
      } catch (const Error& e) {
        out[i].url = jobs[i].url;
        out[i].final_url = jobs[i].url;
        out[i].outcome = ProbeOutcome::Dead;
        out[i].detail = e.what();
        out[i].probed_at = policy.clock ? policy.clock() : utc_now_iso8601();
      }
      out[i].dataset_id = jobs[i].dataset_id;
      if (on_result) {
        std::lock_guard lock(result_mu);
        on_result(out[i]);
      }
    }
  };
  int n = std::clamp(max_in_flight, 1, std::max(1, static_cast<int>(jobs.size())));
  std::vector<std::thread> pool;
  for (int w = 1; w < n; ++w) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  return out;
}

std::vector<std::string> extract_urls(std::string_view text_in) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (pos < text_in.size()) {
    auto a = text_in.find("http://", pos);
    auto b = text_in.find("https://", pos);
    auto start = std::min(a, b);
    if (start == std::string_view::npos) break;
    auto end = start;
    while (end < text_in.size() && !std::isspace(static_cast<unsigned char>(text_in[end])) && text_in[end] != '"' &&
           text_in[end] != '<' && text_in[end] != '>') {
      ++end;
    }
    auto url = text_in.substr(start, end - start);
    while (!url.empty() && std::string_view(".,;:)]}'").find(url.back()) != std::string_view::npos) {
      url.remove_suffix(1);
    }
    if (http::parse_url(url) && std::find(out.begin(), out.end(), url) == out.end()) out.emplace_back(url);
    pos = end;
  }
  return out;
}

}  // namespace rdiaudit::audit
