#include <doctest.h>

#include <chrono>

#include "rdiaudit/http/http_client.hpp"
#include "test_support.hpp"

using namespace rdiaudit;
using namespace std::chrono_literals;

TEST_CASE("url parsing") {
  auto u = http::parse_url("https://Example.org:8443/a/b?x=1");
  REQUIRE(u);
  CHECK(u->scheme == "https");
  CHECK(u->port == 8443);
  CHECK(u->target == "/a/b?x=1");
  auto bare = http::parse_url("http://example.org");
  REQUIRE(bare);
  CHECK(bare->target == "/");
  CHECK(bare->port == 80);
  CHECK(bare->origin() == "http://example.org");
  CHECK_FALSE(http::parse_url("ftp://example.org/x"));
  CHECK_FALSE(http::parse_url("/relative"));
  CHECK_FALSE(http::parse_url("http://"));
  CHECK_FALSE(http::parse_url("not a url"));
}

TEST_CASE("location resolution") {
  auto base = *http::parse_url("https://example.org/a/b/c?q=1");
  CHECK(http::resolve_location(base, "/x")->str() == "https://example.org/x");
  CHECK(http::resolve_location(base, "d")->str() == "https://example.org/a/b/d");
  CHECK(http::resolve_location(base, "http://other.org/y")->str() == "http://other.org/y");
  CHECK(http::resolve_location(base, "//cdn.example.org/z")->str() == "https://cdn.example.org/z");
}

TEST_CASE("url encoding and headers") {
  CHECK(http::url_encode("a b\"c\"") == "a%20b%22c%22");
  CHECK(http::url_encode("AZaz09-_.~") == "AZaz09-_.~");
  http::Headers h{{"Content-Type", "text/html"}, {"content-type", "second"}};
  CHECK(http::find_header(h, "CONTENT-TYPE") == "text/html");
  CHECK_FALSE(http::find_header(h, "Location"));
}

TEST_CASE("transport against the local server") {
  testing::LinkServer server(1500ms);
  http::HttplibTransport t;

  SUBCASE("plain file") {
    http::Request r;
    r.url = server.url("/file.zip");
    auto o = t.send(r);
    REQUIRE(o.ok());
    CHECK(o.response->status == 200);
    CHECK(o.response->header("content-type") == "application/zip");
    CHECK(o.response->body.substr(0, 2) == "PK");
    CHECK_FALSE(o.response->truncated);
  }
  SUBCASE("redirects are not followed") {
    http::Request r;
    r.url = server.url("/redirect");
    auto o = t.send(r);
    REQUIRE(o.ok());
    CHECK(o.response->status == 302);
    CHECK(o.response->header("Location") == "/hop");
  }
  SUBCASE("body cap") {
    http::Request r;
    r.url = server.url("/file.zip");
    r.max_body_bytes = 16;
    auto o = t.send(r);
    REQUIRE(o.ok());
    CHECK(o.response->body.size() == 16);
    CHECK(o.response->truncated);
  }
  SUBCASE("read timeout") {
    http::Request r;
    r.url = server.url("/slow");
    r.read_timeout = 200ms;
    auto start = std::chrono::steady_clock::now();
    auto o = t.send(r);
    CHECK_FALSE(o.ok());
    CHECK(o.failure == http::Failure::Timeout);
    CHECK(std::chrono::steady_clock::now() - start < 1400ms);
  }
  SUBCASE("bad url") {
    http::Request r;
    r.url = "mailto:x@example.org";
    CHECK(t.send(r).failure == http::Failure::BadUrl);
  }
}

TEST_CASE("connection refused is a Connect failure") {
  int port;
  {
    testing::LinkServer s;
    port = s.port();
  }
  http::HttplibTransport t;
  http::Request r;
  r.url = "http://127.0.0.1:" + std::to_string(port) + "/file.zip";
  r.connect_timeout = 500ms;
  auto o = t.send(r);
  CHECK_FALSE(o.ok());
  CHECK(o.failure == http::Failure::Connect);
}

TEST_CASE("POST with body") {
  testing::FakeLlmServer llm([](const std::string& prompt) { return "echo:" + prompt; });
  http::HttplibTransport t;
  http::Request r;
  r.method = "POST";
  r.url = llm.endpoint();
  r.body = R"({"model":"m","messages":[{"role":"user","content":"hi"}]})";
  r.content_type = "application/json";
  auto o = t.send(r);
  REQUIRE(o.ok());
  CHECK(o.response->status == 200);
  CHECK(o.response->body.find("echo:hi") != std::string::npos);
  CHECK(llm.calls() == 1);
}
