#include <doctest.h>

#include <atomic>
#include <thread>

#include "rdiaudit/classifier.hpp"
#include "rdiaudit/error.hpp"
#include "rdiaudit/util/digest.hpp"
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

CitationContext ctx(const std::string& text) {
  return {PaperRef{"A", "Citing paper", 2020, {}, {}}, PaperRef{"B", "Cited paper", 2018, {}, {}}, text,
          Direction::Outgoing};
}

// The context sits between the template's triple quotes.
std::string context_of(const std::string& prompt) {
  auto a = prompt.find("\"\"\"\n");
  auto b = prompt.find("\n\"\"\"", a + 4);
  return prompt.substr(a + 4, b - a - 4);
}

std::string dataset_answer(const std::string& prompt) {
  if (context_of(prompt).find("toolkit") != std::string::npos) {
    return R"({"verdict": "NOT_DATASET", "name": null, "rationale": "software", "confidence": 0.9})";
  }
  return R"({"verdict": "DATASET", "name": "Foo Corpus", "rationale": "released data", "confidence": 0.8})";
}

classify::BackendConfig llm_config(const testing::FakeLlmServer& server, bool fallback = true) {
  classify::BackendConfig c;
  c.endpoint = server.endpoint();
  c.fallback = fallback;
  c.timeout = 2000ms;
  return c;
}

std::vector<CandidateMention> ten_mentions() {
  std::vector<CandidateMention> out;
  for (int i = 0; i < 10; ++i) {
    CandidateMention m;
    m.language = "foo";
    m.context = ctx("We evaluate on the Foo Corpus " + std::to_string(i) + " released by [4].");
    m.mention_id = make_mention_id("foo", "A", "B", m.context.context_text);
    out.push_back(m);
  }
  return out;
}

}  // namespace

TEST_CASE("heuristic: cue phrases and exclusions") {
  auto yes = classify::heuristic_verdict("we evaluate on the Assamese treebank released by");
  CHECK(yes.is_dataset);
  CHECK(yes.backend == Backend::Heuristic);
  CHECK(yes.context_digest == sha256_hex("we evaluate on the Assamese treebank released by").substr(0, 16));
  auto no = classify::heuristic_verdict("we tokenize using the open-source toolkit");
  CHECK_FALSE(no.is_dataset);
  CHECK_FALSE(no.extracted_name);
  for (auto deny : {"library", "metric", "model"}) {
    auto v = classify::heuristic_verdict(std::string("the corpus was scored with a ") + deny);
    CHECK_FALSE(v.is_dataset);
  }
  CHECK_FALSE(classify::heuristic_verdict("As shown in our earlier section.").is_dataset);
}

TEST_CASE("heuristic: name extraction") {
  auto v = classify::heuristic_verdict("We train on the Setswana NCHLT Corpus [12], available online.");
  REQUIRE(v.extracted_name);
  CHECK(*v.extracted_name == "Setswana NCHLT Corpus");
  auto n = classify::heuristic_verdict("Results on the Tswana NER Dataset 2 improve.");
  CHECK(n.extracted_name == "Tswana NER Dataset 2");
  CHECK_FALSE(classify::heuristic_verdict("a corpus was collected").extracted_name);
}

TEST_CASE("heuristic is a pure function of the text") {
  auto a = classify::heuristic_verdict("The Nepali Text Corpus was used.");
  auto b = classify::heuristic_verdict("The Nepali Text Corpus was used.");
  CHECK(a == b);
}

TEST_CASE("answer schema") {
  auto v = classify::parse_llm_answer(R"({"verdict":"DATASET","name":" EverestNER ","confidence":0.75})", "d");
  CHECK(v.is_dataset);
  CHECK(v.extracted_name == "EverestNER");
  CHECK(v.confidence == 0.75);
  CHECK(v.backend == Backend::Llm);
  CHECK(v.context_digest == "d");

  auto fenced = classify::parse_llm_answer("```json\n{\"verdict\":\"NOT_DATASET\",\"name\":\"ignored\"}\n```", "d");
  CHECK_FALSE(fenced.is_dataset);
  CHECK_FALSE(fenced.extracted_name);

  for (auto bad : {"Yes, this is a dataset.", R"({"verdict":"MAYBE"})", R"({"verdict":"DATASET","extra":1})",
                   R"(["DATASET"])", R"({"name":"x"})", R"({"verdict":"DATASET","confidence":2})",
                   R"(Sure! {"verdict":"DATASET"})", R"({"verdict":"DATASET","name":5})"}) {
    INFO(bad);
    try {
      classify::parse_llm_answer(bad, "d");
      FAIL("expected SchemaViolation");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::SchemaViolation);
      CHECK(std::string(e.what()).find(bad) != std::string::npos);
    }
  }
}

TEST_CASE("dataset score") {
  ClassifierVerdict v;
  v.is_dataset = true;
  v.confidence = 0.8;
  CHECK(classify::dataset_score(v) == doctest::Approx(0.8));
  v.is_dataset = false;
  CHECK(classify::dataset_score(v) == doctest::Approx(0.2));
  v.confidence.reset();
  CHECK(classify::dataset_score(v) == doctest::Approx(0.5));
}

TEST_CASE("config validation and templates") {
  classify::BackendConfig c;
  c.temperature = -0.1;
  CHECK(code_of([&] { classify::validate(c); }) == ErrorCode::ConfigError);
  c = {};
  c.endpoint = "not a url";
  CHECK(code_of([&] { classify::validate(c); }) == ErrorCode::ConfigError);
  c = {};
  c.template_id = "nope";
  CHECK(code_of([&] { classify::validate(c); }) == ErrorCode::ConfigError);
  c = {};
  classify::validate(c);
  CHECK(c.model == "Qwen2.5-72B");
  CHECK(c.temperature == 0.0);

  auto tmpl = classify::prompt_template("mention_v1");
  REQUIRE(tmpl);
  for (auto word : {"model", "toolkit", "metric", "librar"}) CHECK(tmpl->find(word) != std::string_view::npos);
  auto p = classify::render_prompt(*tmpl, ctx("the XYZ corpus"), "Foo");
  CHECK(p.find("the XYZ corpus") != std::string::npos);
  CHECK(p.find("Citing paper") != std::string::npos);
  CHECK(p.find("{{") == std::string::npos);
}

TEST_CASE("remote classification with caching") {
  testing::FakeLlmServer server(dataset_answer);
  classify::Classifier c(llm_config(server), std::make_shared<http::HttplibTransport>());
  auto v = c.classify_context(ctx("We use the Foo Corpus."), "Foo");
  CHECK(v.backend == Backend::Llm);
  CHECK(v.is_dataset);
  CHECK(v.extracted_name == "Foo Corpus");
  CHECK(v.context_digest == context_digest("We use the Foo Corpus."));
  auto again = c.classify_context(ctx("We use the Foo Corpus."), "Foo");
  CHECK(again == v);
  CHECK(server.calls() == 1);
  CHECK(c.remote_calls() == 1);

  auto req = server.last_request();
  CHECK(req["model"] == "Qwen2.5-72B");
  CHECK(req["temperature"] == 0.0);
  CHECK(req["messages"][0]["role"] == "user");

  CHECK_FALSE(c.classify_context(ctx("We tokenize with the toolkit."), "Foo").is_dataset);
  CHECK(server.calls() == 2);
  CHECK(code_of([&] { c.classify_context(ctx("   "), "Foo"); }) == ErrorCode::PreconditionViolation);
}

TEST_CASE("schema violations are errors even with fallback") {
  testing::FakeLlmServer server([](const std::string&) { return "I think it's a dataset"; });
  classify::Classifier c(llm_config(server, true), std::make_shared<http::HttplibTransport>());
  CHECK(code_of([&] { c.classify_context(ctx("We use the Foo Corpus."), "Foo"); }) == ErrorCode::SchemaViolation);
}

TEST_CASE("endpoint down: fallback or error") {
  testing::FakeLlmServer server(dataset_answer);
  server.set_status(503);
  classify::Classifier with(llm_config(server, true), std::make_shared<http::HttplibTransport>());
  auto v = with.classify_context(ctx("We use the Foo Corpus."), "Foo");
  CHECK(v.backend == Backend::Heuristic);
  CHECK(v == classify::heuristic_verdict("We use the Foo Corpus."));

  classify::Classifier without(llm_config(server, false), std::make_shared<http::HttplibTransport>());
  CHECK(code_of([&] { without.classify_context(ctx("We use the Foo Corpus."), "Foo"); }) ==
        ErrorCode::EndpointUnavailable);
}

TEST_CASE("slow endpoint times out") {
  testing::FakeLlmServer server(dataset_answer);
  server.set_delay(1500ms);
  auto cfg = llm_config(server, false);
  cfg.timeout = 300ms;
  classify::Classifier c(cfg, std::make_shared<http::HttplibTransport>());
  CHECK(code_of([&] { c.classify_context(ctx("We use the Foo Corpus."), "Foo"); }) == ErrorCode::Timeout);
  cfg.fallback = true;
  classify::Classifier f(cfg, std::make_shared<http::HttplibTransport>());
  CHECK(f.classify_context(ctx("We use the Foo Corpus."), "Foo").backend == Backend::Heuristic);
}

TEST_CASE("bearer token is sent") {
  auto t = std::make_shared<testing::ScriptedTransport>([](const http::Request&) {
    json reply = {{"choices", {{{"message", {{"content", R"({"verdict":"NOT_DATASET"})"}}}}}}};
    return testing::respond(200, reply.dump());
  });
  classify::BackendConfig cfg;
  cfg.endpoint = "http://llm.local/v1/chat/completions";
  cfg.api_key = "k123";
  classify::Classifier c(cfg, t);
  c.classify_context(ctx("anything"), "Foo");
  REQUIRE(t->count() == 1);
  CHECK(http::find_header(t->requests()[0].headers, "Authorization") == "Bearer k123");
}

TEST_CASE("malformed completion envelope") {
  auto t = std::make_shared<testing::ScriptedTransport>(
      [](const http::Request&) { return testing::respond(200, R"({"choices":[]})"); });
  classify::BackendConfig cfg;
  cfg.endpoint = "http://llm.local/v1/chat/completions";
  classify::Classifier c(cfg, t);
  CHECK(code_of([&] { c.classify_context(ctx("anything"), "Foo"); }) == ErrorCode::SchemaViolation);
}

TEST_CASE("batch: endpoint up, down with fallback, down without") {
  testing::FakeLlmServer server(dataset_answer);
  classify::LanguageNames names{{"foo", "Foo"}};

  auto up = ten_mentions();
  auto ids_before = up;
  classify::Classifier c(llm_config(server), std::make_shared<http::HttplibTransport>());
  auto r = classify::classify_batch(c, up, names);
  CHECK(r.failures == 0);
  REQUIRE(r.items.size() == 10);
  for (std::size_t i = 0; i < 10; ++i) {
    CHECK(r.items[i].mention_id == up[i].mention_id);
    REQUIRE(up[i].verdict);
    CHECK(up[i].verdict->backend == Backend::Llm);
    CHECK(up[i].mention_id == ids_before[i].mention_id);
    CHECK(up[i].language == ids_before[i].language);
    CHECK(up[i].context.context_text == ids_before[i].context.context_text);
  }

  server.set_status(500);
  auto down = ten_mentions();
  classify::Classifier fb(llm_config(server, true), std::make_shared<http::HttplibTransport>());
  r = classify::classify_batch(fb, down, names);
  CHECK(r.failures == 0);
  for (const auto& m : down) CHECK(m.verdict->backend == Backend::Heuristic);

  auto failing = ten_mentions();
  classify::Classifier nf(llm_config(server, false), std::make_shared<http::HttplibTransport>());
  r = classify::classify_batch(nf, failing, names);
  CHECK(r.failures == 10);
  for (const auto& item : r.items) CHECK(item.error == ErrorCode::EndpointUnavailable);
  for (const auto& m : failing) CHECK_FALSE(m.verdict);
}

TEST_CASE("verdict cache: single computation per key, ndjson round trip") {
  classify::VerdictCache cache;
  std::atomic<int> computed{0};
  std::vector<std::thread> threads;
  for (int i = 0; i < 8; ++i) {
    threads.emplace_back([&] {
      cache.get_or_compute("k", [&] {
        ++computed;
        std::this_thread::sleep_for(50ms);
        return classify::heuristic_verdict("the XYZ corpus");
      });
    });
  }
  for (auto& t : threads) t.join();
  CHECK(computed == 1);
  CHECK(cache.size() == 1);

  classify::VerdictCache copy;
  copy.load_ndjson(cache.to_ndjson());
  CHECK(copy.get("k") == cache.get("k"));
  CHECK(classify::VerdictCache::key("t", "m", "p") != classify::VerdictCache::key("t", "m", "q"));
}
