#pragma once

#include <chrono>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace rdiaudit::http {

struct Url {
  std::string scheme;  // "http" or "https"
  std::string host;
  int port = 0;
  std::string target;  // path plus query, always starts with '/'

  std::string origin() const;  // scheme://host[:port]
  std::string str() const;
};

/// Absolute http(s) URLs only; nullopt for anything else.
std::optional<Url> parse_url(std::string_view s);

/// Resolves a Location header value against the URL it was returned for.
std::optional<Url> resolve_location(const Url& base, std::string_view location);

/// Percent-encodes a query component (RFC 3986 unreserved set kept as is).
std::string url_encode(std::string_view s);

using Headers = std::vector<std::pair<std::string, std::string>>;

/// Case-insensitive header lookup; first match wins.
std::optional<std::string> find_header(const Headers& headers, std::string_view name);

struct Request {
  std::string method = "GET";
  std::string url;
  Headers headers;
  std::string body;
  std::string content_type;
  std::chrono::milliseconds connect_timeout{10000};
  std::chrono::milliseconds read_timeout{30000};
  std::size_t max_body_bytes = 0;  // 0: unbounded
};

struct Response {
  int status = 0;
  Headers headers;
  std::string body;
  bool truncated = false;  // body was cut at max_body_bytes

  std::optional<std::string> header(std::string_view name) const { return find_header(headers, name); }
};

enum class Failure { None, Connect, Timeout, Tls, Io, BadUrl };

std::string_view to_string(Failure f);

struct Outcome {
  std::optional<Response> response;
  Failure failure = Failure::None;
  std::string detail;

  bool ok() const { return response.has_value(); }
};

/// One request, no redirect following. Implementations must be safe to call
/// from several threads at once.
class Transport {
 public:
  virtual ~Transport() = default;
  virtual Outcome send(const Request& request) = 0;
};

/// cpp-httplib backed transport with TLS certificate verification on.
class HttplibTransport : public Transport {
 public:
  explicit HttplibTransport(std::string user_agent = "rdiaudit/0.3");
  Outcome send(const Request& request) override;

 private:
  std::string user_agent_;
};

}  // namespace rdiaudit::http
