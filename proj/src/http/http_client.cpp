#include "rdiaudit/http/http_client.hpp"

#include <httplib.h>

#include <algorithm>
#include <cctype>
#include <charconv>

#include "rdiaudit/util/text.hpp"

namespace rdiaudit::http {

namespace {

bool iequals(std::string_view a, std::string_view b) {
  return a.size() == b.size() && std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) {
           return std::tolower(static_cast<unsigned char>(x)) == std::tolower(static_cast<unsigned char>(y));
         });
}

int default_port(std::string_view scheme) { return scheme == "https" ? 443 : 80; }

}  // namespace

std::string Url::origin() const {
  std::string out = scheme + "://" + (host.find(':') != std::string::npos ? "[" + host + "]" : host);
  if (port != default_port(scheme)) out += ":" + std::to_string(port);
  return out;
}

std::string Url::str() const { return origin() + target; }

std::optional<Url> parse_url(std::string_view s) {
  s = text::trim(s);
  auto sep = s.find("://");
  if (sep == std::string_view::npos) return std::nullopt;
  Url u;
  u.scheme = text::casefold(s.substr(0, sep));
  if (u.scheme != "http" && u.scheme != "https") return std::nullopt;
  auto rest = s.substr(sep + 3);
  auto slash = rest.find_first_of("/?#");
  auto authority = rest.substr(0, slash);
  std::string_view target = slash == std::string_view::npos ? std::string_view{} : rest.substr(slash);
  if (authority.find('@') != std::string_view::npos) return std::nullopt;  // no userinfo
  if (authority.empty()) return std::nullopt;

  std::string_view host;
  std::string_view port_part;
  u.port = default_port(u.scheme);
  if (authority.front() == '[') {
    auto close = authority.find(']');
    if (close == std::string_view::npos) return std::nullopt;
    host = authority.substr(1, close - 1);
    auto tail = authority.substr(close + 1);
    if (!tail.empty()) {
      if (tail.front() != ':') return std::nullopt;
      port_part = tail.substr(1);
      if (port_part.empty()) return std::nullopt;
    }
  } else {
    auto colon = authority.rfind(':');
    host = authority.substr(0, colon);
    if (colon != std::string_view::npos) {
      port_part = authority.substr(colon + 1);
      if (port_part.empty()) return std::nullopt;
    }
  }
  if (!port_part.empty()) {
    auto port_s = port_part;
    int port = 0;
    auto [p, ec] = std::from_chars(port_s.data(), port_s.data() + port_s.size(), port);
    if (ec != std::errc{} || p != port_s.data() + port_s.size() || port <= 0 || port > 65535) return std::nullopt;
    u.port = port;
  }
  if (host.empty()) return std::nullopt;
  for (char c : host) {
    if (std::isspace(static_cast<unsigned char>(c)) || c == '/' || c == '\\') return std::nullopt;
  }
  u.host = text::casefold(host);

  auto hash = target.find('#');
  if (hash != std::string_view::npos) target = target.substr(0, hash);
  if (target.empty()) {
    u.target = "/";
  } else if (target.front() == '?') {
    u.target = "/" + std::string(target);
  } else {
    u.target = std::string(target);
  }
  for (char c : u.target) {
    if (std::isspace(static_cast<unsigned char>(c))) return std::nullopt;
  }
  return u;
}

std::optional<Url> resolve_location(const Url& base, std::string_view location) {
  location = text::trim(location);
  if (location.empty()) return std::nullopt;
  if (location.find("://") != std::string_view::npos) return parse_url(location);
  if (location.starts_with("//")) return parse_url(base.scheme + ":" + std::string(location));
  Url u = base;
  if (location.front() == '/') {
    u.target = std::string(location);
  } else if (location.front() == '?') {
    u.target = base.target.substr(0, base.target.find('?')) + std::string(location);
  } else {
    auto path = base.target.substr(0, base.target.find('?'));
    u.target = path.substr(0, path.rfind('/') + 1) + std::string(location);
  }
  return u;
}

std::string url_encode(std::string_view s) {
  static const char* hex = "0123456789ABCDEF";
  std::string out;
  for (unsigned char c : s) {
    if (std::isalnum(c) || c == '-' || c == '_' || c == '.' || c == '~') {
      out += static_cast<char>(c);
    } else {
      out += '%';
      out += hex[c >> 4];
      out += hex[c & 15];
    }
  }
  return out;
}

std::optional<std::string> find_header(const Headers& headers, std::string_view name) {
  for (const auto& [k, v] : headers) {
    if (iequals(k, name)) return v;
  }
  return std::nullopt;
}

std::string_view to_string(Failure f) {
  switch (f) {
    case Failure::None: return "none";
    case Failure::Connect: return "connect";
    case Failure::Timeout: return "timeout";
    case Failure::Tls: return "tls";
    case Failure::Io: return "io";
    case Failure::BadUrl: return "bad-url";
  }
  return "unknown";
}

HttplibTransport::HttplibTransport(std::string user_agent) : user_agent_(std::move(user_agent)) {}

Outcome HttplibTransport::send(const Request& request) {
  Outcome out;
  auto url = parse_url(request.url);
  if (!url) {
    out.failure = Failure::BadUrl;
    out.detail = "not an absolute http(s) url: " + request.url;
    return out;
  }

  httplib::Client cli(url->origin());
  cli.set_follow_location(false);
  cli.set_keep_alive(false);
  cli.set_connection_timeout(std::chrono::duration_cast<std::chrono::microseconds>(request.connect_timeout));
  cli.set_read_timeout(std::chrono::duration_cast<std::chrono::microseconds>(request.read_timeout));
  cli.set_write_timeout(std::chrono::duration_cast<std::chrono::microseconds>(request.read_timeout));
  cli.enable_server_certificate_verification(true);

  httplib::Headers headers;
  bool has_agent = false;
  for (const auto& [k, v] : request.headers) {
    if (iequals(k, "User-Agent")) has_agent = true;
    headers.emplace(k, v);
  }
  if (!has_agent) headers.emplace("User-Agent", user_agent_);

  Response resp;
  bool capped = false;
  auto started = std::chrono::steady_clock::now();
  httplib::Result result;

  if (request.method == "GET" || request.method == "HEAD") {
    auto on_response = [&](const httplib::Response& r) {
      resp.status = r.status;
      for (const auto& [k, v] : r.headers) resp.headers.emplace_back(k, v);
      return true;
    };
    auto on_content = [&](const char* data, size_t len) {
      if (request.max_body_bytes && resp.body.size() + len > request.max_body_bytes) {
        resp.body.append(data, request.max_body_bytes - resp.body.size());
        capped = true;
        return false;
      }
      resp.body.append(data, len);
      return true;
    };
    if (request.method == "HEAD") {
      result = cli.Head(url->target, headers);
    } else {
      result = cli.Get(url->target, headers, on_response, on_content);
    }
  } else if (request.method == "POST") {
    result = cli.Post(url->target, headers, request.body,
                      request.content_type.empty() ? "application/json" : request.content_type);
  } else {
    out.failure = Failure::BadUrl;
    out.detail = "unsupported method " + request.method;
    return out;
  }

  if (capped) {
    resp.truncated = true;
    out.response = std::move(resp);
    return out;
  }
  if (!result) {
    auto err = result.error();
    auto elapsed = std::chrono::steady_clock::now() - started;
    out.detail = httplib::to_string(err);
    switch (err) {
      case httplib::Error::ConnectionTimeout:
        out.failure = Failure::Timeout;
        break;
      case httplib::Error::Read:
      case httplib::Error::Write:
        // httplib reports an expired read timeout as a plain read error.
        out.failure = elapsed + std::chrono::milliseconds(50) >= request.read_timeout ? Failure::Timeout : Failure::Io;
        break;
      case httplib::Error::SSLConnection:
      case httplib::Error::SSLLoadingCerts:
      case httplib::Error::SSLServerVerification:
      case httplib::Error::SSLPeerCouldBeClosed_:
        out.failure = Failure::Tls;
        break;
      case httplib::Error::Connection:
      case httplib::Error::BindIPAddress:
      case httplib::Error::ProxyConnection:
        out.failure = Failure::Connect;
        break;
      default:
        out.failure = Failure::Io;
    }
    return out;
  }

  if (request.method == "GET") {
    // Handlers already captured status/headers/body; httplib leaves the body
    // of the result empty when a content receiver is installed.
    if (resp.status == 0) resp.status = result->status;
    if (resp.headers.empty()) {
      for (const auto& [k, v] : result->headers) resp.headers.emplace_back(k, v);
    }
    if (resp.body.empty() && !result->body.empty()) resp.body = result->body;
  } else {
    resp.status = result->status;
    for (const auto& [k, v] : result->headers) resp.headers.emplace_back(k, v);
    resp.body = result->body;
  }
  out.response = std::move(resp);
  return out;
}

}  // namespace rdiaudit::http
