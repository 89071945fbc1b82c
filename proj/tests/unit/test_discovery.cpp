#include <doctest.h>

#include <algorithm>
#include <mutex>
#include <set>

#include "rdiaudit/discovery.hpp"
#include "rdiaudit/error.hpp"
#include "rdiaudit/util/digest.hpp"
#include "rdiaudit/util/files.hpp"
#include "rdiaudit/util/log.hpp"
#include "test_support.hpp"

using namespace rdiaudit;
using namespace std::chrono_literals;
using nlohmann::json;

namespace {

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::IoError;
}

json paper_json(const std::string& id, int year) {
  return {{"paperId", id}, {"title", "Paper " + id}, {"year", year}};
}

// Search "Foo" returns `hits` papers p0..p{hits-1}; p0 has two references
// and one citation with contexts plus one citation without text.
json small_world(int hits) {
  json w = {{"papers", json::object()}, {"search", json::object()}, {"references", json::object()},
            {"citations", json::object()}};
  json ids = json::array();
  for (int i = 0; i < hits; ++i) {
    auto id = "p" + std::to_string(i);
    w["papers"][id] = paper_json(id, 2000 + i % 20);
    w["references"][id] = json::array();
    w["citations"][id] = json::array();
    ids.push_back(id);
  }
  w["search"]["Foo"] = ids;
  for (auto id : {"d1", "d2", "c1", "c2"}) {
    w["papers"][id] = paper_json(id, 2010);
    w["references"][id] = json::array();
    w["citations"][id] = json::array();
  }
  w["references"]["p0"] = {{{"paperId", "d1"}, {"contexts", {"We use the Foo Treebank [3]."}}},
                           {{"paperId", "d2"}, {"contexts", {"Data from the Foo Speech Corpus."}}}};
  w["citations"]["p0"] = {{{"paperId", "c1"}, {"contexts", {"The corpus released by [7] was reused."}}},
                          {{"paperId", "c2"}, {"contexts", json::array()}}};
  return w;
}

struct Sleeps {
  std::mutex mu;
  std::vector<std::chrono::milliseconds> delays;
  discovery::Sleeper sleeper() {
    return [this](std::chrono::milliseconds d) {
      std::lock_guard lock(mu);
      delays.push_back(d);
    };
  }
};

discovery::ScholarClient live_client(const testing::ScholarServer& server, std::shared_ptr<discovery::ResponseCache> cache,
                                     discovery::Sleeper sleeper = [](std::chrono::milliseconds) {}) {
  discovery::ScholarConfig sc;
  sc.base_url = server.url();
  return discovery::ScholarClient(sc, std::make_shared<http::HttplibTransport>(), cache, nullptr, std::move(sleeper));
}

lang::LanguageRegistry foo_registry() {
  return lang::LanguageRegistry::parse("iso639_3,name,population_millions\nfoo,Foo,1.5\nbar,Bar,2.0\n");
}

}  // namespace

TEST_CASE("build_query") {
  CHECK(discovery::build_query("Nepali", discovery::DiscoveryConfig{}.query_terms) ==
        R"("Nepali" AND ("corpus" OR "dataset" OR "data"))");
  CHECK(discovery::build_query("Setswana", {"corpus"}) == R"("Setswana" AND ("corpus"))");
  CHECK(code_of([] { discovery::build_query("", {"corpus"}); }) == ErrorCode::PreconditionViolation);
  CHECK(code_of([] { discovery::build_query("Nepali", {}); }) == ErrorCode::PreconditionViolation);
}

TEST_CASE("backoff and retry hints") {
  discovery::RetryPolicy p;
  CHECK(discovery::backoff_delay(p, 1, 0.5, std::nullopt) == 500ms);
  CHECK(discovery::backoff_delay(p, 3, 0.5, std::nullopt) == 2000ms);
  CHECK(discovery::backoff_delay(p, 1, 0.0, std::nullopt) == 375ms);
  CHECK(discovery::backoff_delay(p, 1, 1.0, std::nullopt) == 625ms);
  CHECK(discovery::backoff_delay(p, 30, 0.5, std::nullopt) == 30000ms);
  CHECK(discovery::backoff_delay(p, 1, 0.5, 7000ms) == 7000ms);
  CHECK(discovery::parse_retry_after("3") == 3000ms);
  CHECK(discovery::parse_retry_after(" 0 ") == 0ms);
  CHECK_FALSE(discovery::parse_retry_after("Wed, 21 Oct 2015 07:28:00 GMT"));
  CHECK_FALSE(discovery::parse_retry_after("-1"));
}

TEST_CASE("rate limiter spaces admissions") {
  Sleeps s;
  discovery::RateLimiter limiter(2.0, s.sleeper());
  limiter.acquire();
  limiter.acquire();
  limiter.acquire();
  CHECK(limiter.admitted() == 3);
  REQUIRE(s.delays.size() == 2);
  CHECK(s.delays[0] > 400ms);
  CHECK(s.delays[0] <= 500ms);
  CHECK(s.delays[1] > 900ms);
  CHECK(s.delays[1] <= 1000ms);

  Sleeps none;
  discovery::RateLimiter off(0.0, none.sleeper());
  for (int i = 0; i < 5; ++i) off.acquire();
  CHECK(none.delays.empty());
}

TEST_CASE("response cache is content addressed") {
  testing::TempDir dir;
  discovery::ResponseCache cache(dir / "api");
  auto key = discovery::ResponseCache::key_for("GET", "/x?y=1");
  CHECK(key == sha256_hex("GET /x?y=1\n"));
  CHECK_FALSE(cache.get(key));
  cache.put(key, "GET /x?y=1", R"({"a":1})");
  CHECK(cache.get(key) == R"({"a":1})");
  CHECK(cache.size() == 1);
  cache.put(key, "GET /x?y=1", R"({"a":1})");
  CHECK(cache.size() == 1);
}

TEST_CASE("paper_from_api") {
  auto p = discovery::paper_from_api({{"paperId", "x"}, {"title", "T"}, {"year", nullptr}, {"venue", "ACL"}});
  REQUIRE(p);
  CHECK(p->paper_id == "x");
  CHECK_FALSE(p->year);
  CHECK(p->venue == "ACL");
  CHECK_FALSE(discovery::paper_from_api({{"paperId", nullptr}}));
  CHECK_FALSE(discovery::paper_from_api(json::object()));

  PaperRef a{"x", "T", std::nullopt, std::nullopt, std::nullopt};
  PaperRef b{"x", "T", 2001, "ACL", std::nullopt};
  discovery::merge_paper(a, b);
  CHECK(a.year == 2001);
  CHECK(a.venue == "ACL");
}

TEST_CASE("search: all results when fewer than k, first k otherwise") {
  testing::TempDir dir;
  {
    testing::ScholarServer server(small_world(5));
    auto client = live_client(server, std::make_shared<discovery::ResponseCache>(dir / "a"));
    auto res = client.search_papers(R"("Foo" AND ("corpus"))", 400);
    REQUIRE(res.size() == 5);
    CHECK(res[0].paper_id == "p0");
    CHECK(res[4].paper_id == "p4");
    CHECK(code_of([&] { client.search_papers("q", 0); }) == ErrorCode::PreconditionViolation);
  }
  {
    testing::ScholarServer server(small_world(600), 100);
    auto client = live_client(server, std::make_shared<discovery::ResponseCache>(dir / "b"));
    auto res = client.search_papers(R"("Foo" AND ("corpus"))", 400);
    REQUIRE(res.size() == 400);
    for (int i = 0; i < 400; ++i) CHECK(res[static_cast<std::size_t>(i)].paper_id == "p" + std::to_string(i));
    CHECK(server.requests() == 4);
  }
  {
    // Server pages smaller than requested limit are followed via `next`.
    testing::ScholarServer server(small_world(10), 3);
    auto client = live_client(server, std::make_shared<discovery::ResponseCache>(dir / "c"));
    auto res = client.search_papers(R"("Foo" AND ("corpus"))", 7);
    REQUIRE(res.size() == 7);
    CHECK(res.back().paper_id == "p6");
  }
}

TEST_CASE("expand citations: directions, skipped empty contexts, self links") {
  testing::ScholarServer server(small_world(2));
  testing::TempDir dir;
  auto client = live_client(server, std::make_shared<discovery::ResponseCache>(dir / "api"));
  std::vector<std::string> logged;
  std::mutex mu;
  auto previous = log::set_sink([&](log::Level, std::string_view m) {
    std::lock_guard lock(mu);
    logged.emplace_back(m);
  });
  auto ctxs = client.expand_citations(*discovery::paper_from_api(paper_json("p0", 2000)));
  log::set_sink(previous);

  REQUIRE(ctxs.size() == 3);
  long out = std::count_if(ctxs.begin(), ctxs.end(), [](auto& c) { return c.direction == Direction::Outgoing; });
  CHECK(out == 2);
  for (const auto& c : ctxs) {
    if (c.direction == Direction::Outgoing) {
      CHECK(c.citing.paper_id == "p0");
    } else {
      CHECK(c.cited.paper_id == "p0");
      CHECK(c.citing.paper_id == "c1");
    }
    CHECK_FALSE(c.context_text.empty());
  }
  long skip_lines = std::count_if(logged.begin(), logged.end(),
                                  [](auto& l) { return l.find("no context text") != std::string::npos; });
  CHECK(skip_lines == 1);
  CHECK(client.expand_citations(*discovery::paper_from_api(paper_json("p1", 2001))).empty());
}

TEST_CASE("retries: server errors, 429 with Retry-After, exhaustion") {
  testing::ScholarServer server(small_world(3));
  testing::TempDir dir;

  SUBCASE("transient 503 then success") {
    Sleeps s;
    auto client = live_client(server, std::make_shared<discovery::ResponseCache>(dir / "a"), s.sleeper());
    server.fail_next(2, 503);
    auto res = client.search_papers(R"("Foo" AND ("corpus"))", 10);
    CHECK(res.size() == 3);
    CHECK(client.network_requests() == 3);
    REQUIRE(s.delays.size() == 2);
    CHECK(s.delays[1] > s.delays[0]);
  }
  SUBCASE("429 honours the server hint") {
    Sleeps s;
    auto client = live_client(server, std::make_shared<discovery::ResponseCache>(dir / "b"), s.sleeper());
    server.fail_next(1, 429, 3);
    CHECK(client.search_papers(R"("Foo" AND ("corpus"))", 10).size() == 3);
    REQUIRE(s.delays.size() == 1);
    CHECK(s.delays[0] == 3000ms);
  }
  SUBCASE("rate limited after max attempts") {
    Sleeps s;
    auto client = live_client(server, std::make_shared<discovery::ResponseCache>(dir / "c"), s.sleeper());
    server.fail_next(5, 429, 1);
    CHECK(code_of([&] { client.search_papers(R"("Foo" AND ("corpus"))", 10); }) == ErrorCode::RateLimited);
    CHECK(client.network_requests() == 5);
    CHECK(s.delays.size() == 4);
  }
  SUBCASE("client errors are not retried") {
    auto client = live_client(server, std::make_shared<discovery::ResponseCache>(dir / "d"));
    CHECK(code_of([&] { client.expand_citations(PaperRef{"unknown", "", {}, {}, {}}); }) ==
          ErrorCode::TransportFailure);
    CHECK(client.network_requests() == 1);
  }
}

TEST_CASE("malformed responses") {
  auto transport = std::make_shared<testing::ScriptedTransport>(
      [](const http::Request&) { return testing::respond(200, "not json"); });
  discovery::ScholarConfig sc;
  sc.base_url = "http://scripted";
  discovery::ScholarClient client(sc, transport, nullptr);
  CHECK(code_of([&] { client.search_papers("q", 5); }) == ErrorCode::MalformedResponse);

  auto no_data = std::make_shared<testing::ScriptedTransport>(
      [](const http::Request&) { return testing::respond(200, R"({"total": 3})"); });
  discovery::ScholarClient client2(sc, no_data, nullptr);
  CHECK(code_of([&] { client2.search_papers("q", 5); }) == ErrorCode::MalformedResponse);
}

TEST_CASE("api key header and connection failures") {
  auto transport = std::make_shared<testing::ScriptedTransport>(
      [](const http::Request&) { return testing::fail(http::Failure::Connect); });
  discovery::ScholarConfig sc;
  sc.base_url = "http://scripted";
  sc.api_key = "secret";
  discovery::ScholarClient client(sc, transport, nullptr, nullptr, [](std::chrono::milliseconds) {});
  CHECK(code_of([&] { client.search_papers("q", 5); }) == ErrorCode::TransportFailure);
  REQUIRE(transport->count() == 5);
  CHECK(http::find_header(transport->requests()[0].headers, "x-api-key") == "secret");
}

TEST_CASE("replay serves only from cache") {
  testing::TempDir dir;
  auto cache = std::make_shared<discovery::ResponseCache>(dir / "api");
  std::vector<PaperRef> live;
  {
    testing::ScholarServer server(small_world(4));
    auto client = live_client(server, cache);
    live = client.search_papers(R"("Foo" AND ("corpus"))", 10);
  }
  discovery::ScholarConfig sc;
  sc.replay = true;
  discovery::ScholarClient replay(sc, nullptr, cache);
  CHECK(replay.search_papers(R"("Foo" AND ("corpus"))", 10) == live);
  CHECK(replay.network_requests() == 0);
  CHECK(replay.cache_hits() >= 1);
  CHECK(code_of([&] { replay.search_papers(R"("Bar" AND ("corpus"))", 10); }) == ErrorCode::ReplayMiss);
}

TEST_CASE("mention ids and assembly") {
  auto reg = foo_registry();
  PaperRef a{"A", "a", 2001, {}, {}}, b{"B", "b", 2002, {}, {}};
  std::vector<CitationContext> ctxs{{a, b, "first context", Direction::Outgoing},
                                    {a, b, "second context", Direction::Outgoing},
                                    {a, b, "first context", Direction::Outgoing}};
  auto ms = discovery::assemble_candidates(reg, "foo", ctxs);
  REQUIRE(ms.size() == 2);
  for (const auto& m : ms) {
    auto oracle =
        sha256_hex("foo\x1f" "A\x1f" "B\x1f" + sha256_hex(m.context.context_text).substr(0, 16)).substr(0, 16);
    CHECK(m.mention_id == oracle);
    CHECK(m.language == "foo");
  }
  CHECK(std::is_sorted(ms.begin(), ms.end(), [](auto& x, auto& y) { return x.mention_id < y.mention_id; }));
  auto again = discovery::assemble_candidates(reg, "foo", {ctxs[1], ctxs[0], ctxs[0]});
  CHECK(discovery::candidates_ndjson(again) == discovery::candidates_ndjson(ms));
  CHECK(make_mention_id("bar", "A", "B", "first context") != make_mention_id("foo", "A", "B", "first context"));
  CHECK(code_of([&] { discovery::assemble_candidates(reg, "zzz", ctxs); }) == ErrorCode::PreconditionViolation);
}

TEST_CASE("candidate records round trip") {
  auto reg = foo_registry();
  PaperRef a{"A", "a", 2001, "ACL", {}}, b{"B", "b", {}, {}, "abs"};
  auto ms = discovery::assemble_candidates(reg, "foo", {{a, b, "ctx", Direction::Incoming}});
  PaperIndex papers{{"A", a}, {"B", b}};
  auto rec = candidate_to_record(ms[0]);
  CHECK(rec["direction"] == "INCOMING");
  CHECK(rec["citing"] == "A");
  auto back = candidate_from_record(rec, papers);
  CHECK(back.mention_id == ms[0].mention_id);
  CHECK(back.context.cited == b);
  CHECK(code_of([&] { candidate_from_record(rec, PaperIndex{}); }) == ErrorCode::MalformedRecord);
}

TEST_CASE("run_discovery over the demo world") {
  auto world = json::parse(files::read_text(testing::fixture("demo/scholar_world.json")));
  auto reg = lang::LanguageRegistry::load(testing::fixture("demo/workspace/inputs/languages.csv"));
  testing::TempDir dir;
  testing::ScholarServer server(world);
  auto cache = std::make_shared<discovery::ResponseCache>(dir / "api");
  auto client = live_client(server, cache);
  auto first = discovery::run_discovery(client, reg, {"tsn", "npi"}, {});
  REQUIRE(first.ok());
  auto names = server.searched_names();
  CHECK(std::set<std::string>(names.begin(), names.end()) == std::set<std::string>{"Setswana", "Nepali"});
  REQUIRE(first.runs.size() == 2);
  CHECK(first.runs[0].language == "tsn");
  CHECK(first.runs[0].papers == 7);
  CHECK(first.runs[1].papers == 9);

  long contexts = 0;
  for (const auto& r : first.runs) contexts += r.contexts;
  CHECK(static_cast<long>(first.candidates.size()) <= contexts);
  for (const auto& m : first.candidates) {
    CHECK(first.papers.count(m.context.citing.paper_id) == 1);
    CHECK(first.papers.count(m.context.cited.paper_id) == 1);
    CHECK(m.context.citing.paper_id != m.context.cited.paper_id);
  }

  discovery::ScholarConfig sc;
  sc.replay = true;
  discovery::ScholarClient replay(sc, nullptr, cache);
  auto second = discovery::run_discovery(replay, reg, {"tsn", "npi"}, {});
  REQUIRE(second.ok());
  CHECK(discovery::candidates_ndjson(second.candidates) == discovery::candidates_ndjson(first.candidates));
  CHECK(discovery::papers_ndjson(second.papers) == discovery::papers_ndjson(first.papers));
  CHECK(replay.network_requests() == 0);
}

TEST_CASE("one failing language does not stop the others") {
  auto world = json::parse(files::read_text(testing::fixture("demo/scholar_world.json")));
  auto reg = lang::LanguageRegistry::load(testing::fixture("demo/workspace/inputs/languages.csv"));
  testing::ScholarServer server(world);
  auto inner = std::make_shared<http::HttplibTransport>();
  auto transport = std::make_shared<testing::ScriptedTransport>([inner](const http::Request& r) {
    if (r.url.find("Nepali") != std::string::npos) return testing::respond(500, "{}");
    return inner->send(r);
  });
  discovery::ScholarConfig sc;
  sc.base_url = server.url();
  sc.retry.max_attempts = 2;
  discovery::ScholarClient client(sc, transport, nullptr, nullptr, [](std::chrono::milliseconds) {});
  discovery::DiscoveryConfig dc;
  dc.workers = 2;
  auto res = discovery::run_discovery(client, reg, {"npi", "tsn"}, dc);
  CHECK_FALSE(res.ok());
  REQUIRE(res.runs.size() == 2);
  CHECK(res.runs[0].error.has_value());
  CHECK_FALSE(res.runs[1].error.has_value());
  CHECK_FALSE(res.candidates.empty());
  for (const auto& m : res.candidates) CHECK(m.language == "tsn");
}
