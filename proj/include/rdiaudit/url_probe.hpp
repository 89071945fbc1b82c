#pragma once

#include <chrono>
#include <condition_variable>
#include <cstddef>
#include <functional>
#include <map>
#include <mutex>
#include <string>
#include <vector>

#include "rdiaudit/audit_types.hpp"
#include "rdiaudit/http/http_client.hpp"

namespace rdiaudit::audit {

struct ProbePolicy {
  std::chrono::milliseconds connect_timeout{10000};
  std::chrono::milliseconds read_timeout{30000};
  int max_redirects = 10;
  std::string user_agent = "rdiaudit-linkcheck/0.3 (dataset accessibility audit)";
  std::size_t max_body_bytes = 64 * 1024;
  std::function<std::string()> clock;  // probed_at source; UTC now when unset
};

/// Caps concurrent requests per host. Hosts are compared case-insensitively
/// including the port.
class HostLimiter {
 public:
  explicit HostLimiter(int per_host) : per_host_(per_host < 1 ? 1 : per_host) {}
  void acquire(const std::string& host_key);
  void release(const std::string& host_key);
  int max_observed() const;

 private:
  int per_host_;
  mutable std::mutex mu_;
  std::condition_variable cv_;
  std::map<std::string, int> in_flight_;
  int max_observed_ = 0;
};

/// Content-kind hint from headers and the sniffed body prefix.
ContentKind sniff_content_kind(const http::Response& response, const http::Url& final_url);

/// Follows up to max_redirects hops. Network problems are outcomes; only a
/// syntactically invalid URL throws (InvalidUrl). An https -> http redirect
/// is treated as an insecure downgrade and recorded as TLS_FAILURE.
UrlProbe probe_url(http::Transport& transport, const std::string& url, const ProbePolicy& policy,
                   HostLimiter* limiter = nullptr);

struct ProbeJob {
  std::string dataset_id;
  std::string url;
};

/// Probes every job with at most `max_in_flight` concurrent requests overall
/// and `per_host` per host. Results keep job order; invalid URLs come back as
/// DEAD probes with the parse problem in `detail`.
/// `on_result`, when set, is called once per finished probe, serialized.
std::vector<UrlProbe> probe_all(http::Transport& transport, const std::vector<ProbeJob>& jobs,
                                const ProbePolicy& policy, int max_in_flight = 8, int per_host = 2,
                                const std::function<void(const UrlProbe&)>& on_result = {});

/// http(s) URLs appearing in free text, trailing punctuation trimmed, in
/// order of first appearance without duplicates.
std::vector<std::string> extract_urls(std::string_view text);

}  // namespace rdiaudit::audit
