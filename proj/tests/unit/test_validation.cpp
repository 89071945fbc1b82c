#include <doctest.h>

#include <fstream>

#include "rdiaudit/error.hpp"
#include "rdiaudit/ledger.hpp"
#include "rdiaudit/util/digest.hpp"
#include "rdiaudit/util/files.hpp"
#include "rdiaudit/validation.hpp"
#include "rdiaudit/workspace.hpp"
#include "test_support.hpp"

using namespace rdiaudit;
using namespace rdiaudit::validation;

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

CandidateMention mention(const std::string& id, const std::string& lang, const std::string& text = "ctx") {
  CandidateMention m;
  m.mention_id = id;
  m.language = lang;
  m.context = {PaperRef{"citing-" + id, "t", 2020, {}, {}}, PaperRef{"cited-" + id, "t", 2019, {}, {}}, text,
               Direction::Outgoing};
  return m;
}

Event state(long seq, const std::string& m, State s, std::optional<std::string> name = std::nullopt,
            std::optional<std::string> target = std::nullopt, std::optional<std::string> reason = std::nullopt) {
  Event e;
  e.seq = seq;
  e.ts = "2025-01-01T00:00:00Z";
  e.annotator = "t";
  e.payload = StateChange{m, s, std::move(target), std::move(reason), std::move(name)};
  return e;
}

std::vector<CandidateMention> four() {
  return {mention("m1", "ind"), mention("m2", "ind"), mention("m3", "khm"), mention("m4", "tsn")};
}

}  // namespace

TEST_CASE("state names") {
  for (auto s : {State::Pending, State::Confirmed, State::Unconfirmable, State::NonDataset, State::Merged}) {
    CHECK(state_from_string(to_string(s)) == s);
  }
  CHECK(to_string(State::NonDataset) == "NON_DATASET");
  CHECK_FALSE(state_from_string("MAYBE"));
}

TEST_CASE("event json round trip for every kind") {
  std::vector<Event> events;
  events.push_back(state(1, "m1", State::Confirmed, "Penn Treebank"));
  events.back().note = "first";
  events.push_back(state(2, "m2", State::Merged, std::nullopt, "abc"));
  events.push_back(state(3, "m3", State::NonDataset, std::nullopt, std::nullopt, std::string(kNonDistinct)));
  Event a;
  a.seq = 4;
  a.ts = "2025-01-01T00:00:04Z";
  a.annotator = "x";
  a.payload = AccessibilityNote{"abc", audit::AccessStatus::Open, true};
  events.push_back(a);
  Event l = a;
  l.seq = 5;
  l.payload = LabelAssignment{"abc", {"Sentiment Analysis", "NER"}, Modality::Speech};
  events.push_back(l);
  Event r = a;
  r.seq = 6;
  r.payload = EmergenceReview{"abc", {"p1", "p2"}};
  events.push_back(r);
  for (const auto& e : events) {
    CHECK(Event::from_json(e.to_json()) == e);
    CHECK(Event::from_json(nlohmann::json::parse(e.line())) == e);
  }
  CHECK(events[0].to_json()["kind"] == "state");
  CHECK(events[3].to_json()["kind"] == "accessibility");
  CHECK(events[4].to_json()["kind"] == "labels");
  CHECK(events[5].to_json()["kind"] == "emergence");
  CHECK(code_of([] { Event::from_json({{"seq", 1}, {"kind", "state"}}); }) == ErrorCode::MalformedRecord);
  CHECK(code_of([] { Event::from_json({{"seq", 1}, {"kind", "weird"}, {"ts", ""}, {"annotator", ""}}); }) ==
        ErrorCode::MalformedRecord);
}

TEST_CASE("ledger parsing: torn tail dropped, bad middle line rejected") {
  auto good = state(1, "m1", State::Confirmed, "X").line() + "\n";
  CHECK(parse_ledger(good).size() == 1);
  CHECK(parse_ledger(good + "{\"seq\":2,\"kind\":\"sta").size() == 1);
  CHECK(code_of([&] { parse_ledger("{broken}\n" + good); }) == ErrorCode::MalformedRecord);
  CHECK(parse_ledger("").empty());
}

TEST_CASE("ledger file: durable appends and torn-tail repair") {
  testing::TempDir dir;
  LedgerFile f(dir / "ledger/decisions.log");
  CHECK(f.load().empty());
  f.append(state(1, "m1", State::Confirmed, "X"));
  {
    std::ofstream out(f.path(), std::ios::app);
    out << "{\"seq\":2,\"ki";
  }
  CHECK(f.load().size() == 1);
  f.append(state(2, "m2", State::Unconfirmable));
  auto events = f.load();
  REQUIRE(events.size() == 2);
  CHECK(events[1].seq == 2);
  auto text = files::read_text(f.path());
  CHECK(std::count(text.begin(), text.end(), '\n') == 2);
}

TEST_CASE("apply: confirm, merge, errors") {
  Store s(four());
  CHECK(pipeline_summary(s).pending == 4);
  s.apply(state(1, "m1", State::Confirmed, "Penn Treebank"));
  auto sum = pipeline_summary(s);
  CHECK(sum.pending == 3);
  CHECK(sum.confirmed == 1);
  auto id = make_dataset_id("Penn Treebank", "ind", "m1");
  CHECK(id == sha256_hex("Penn Treebank\x1f" "ind\x1f" "m1").substr(0, 16));
  REQUIRE(s.dataset(id));

  CHECK(code_of([&] { s.apply(state(2, "m2", State::Merged, std::nullopt, "nope")); }) ==
        ErrorCode::UnknownMergeTarget);
  CHECK(code_of([&] { s.apply(state(2, "zz", State::Confirmed, "A")); }) == ErrorCode::UnknownMention);
  CHECK(code_of([&] { s.apply(state(3, "m2", State::Unconfirmable)); }) == ErrorCode::SequenceGap);
  CHECK(code_of([&] { s.apply(state(1, "m2", State::Unconfirmable)); }) == ErrorCode::SequenceConflict);
  CHECK(code_of([&] { s.apply(state(2, "m2", State::Confirmed)); }) == ErrorCode::InvalidTransition);
  CHECK(code_of([&] { s.apply(state(2, "m2", State::Unconfirmable, std::nullopt, id)); }) ==
        ErrorCode::InvalidTransition);
  CHECK(code_of([&] { s.apply(state(2, "m2", State::Confirmed, "A", std::nullopt, std::string(kNonDistinct))); }) ==
        ErrorCode::InvalidTransition);
  CHECK(code_of([&] { s.apply(state(2, "m1", State::Merged, std::nullopt, id)); }) == ErrorCode::InvalidTransition);
  CHECK(s.revision() == 1);

  // Identical re-application is a no-op.
  s.apply(state(1, "m1", State::Confirmed, "Penn Treebank"));
  CHECK(s.revision() == 1);

  s.apply(state(2, "m2", State::Merged, std::nullopt, id));
  auto records = consolidate(s);
  REQUIRE(records.size() == 1);
  CHECK(records[0].member_mention_ids == std::set<std::string>{"m1", "m2"});
  CHECK(records[0].canonical_name == "Penn Treebank");

  // A founder cannot leave while merged mentions still point at it.
  CHECK(code_of([&] { s.apply(state(3, "m1", State::NonDataset)); }) == ErrorCode::InvalidTransition);

  CHECK(code_of([&] {
          Event e;
          e.seq = 3;
          e.payload = LabelAssignment{"missing", {"x"}, Modality::Text};
          s.apply(e);
        }) == ErrorCode::UnknownDataset);
}

TEST_CASE("re-decisions move mentions between states") {
  Store s(four());
  s.apply(state(1, "m1", State::Confirmed, "A"));
  auto a = make_dataset_id("A", "ind", "m1");
  s.apply(state(2, "m2", State::Merged, std::nullopt, a));
  s.apply(state(3, "m2", State::Unconfirmable));
  CHECK(s.dataset(a)->merged.empty());
  s.apply(state(4, "m1", State::NonDataset));
  CHECK(s.datasets().empty());
  s.apply(state(5, "m1", State::Confirmed, "A2"));
  CHECK(s.datasets().size() == 1);
  auto sum = pipeline_summary(s);
  CHECK(sum.total == sum.pending + sum.confirmed + sum.unconfirmable + sum.non_dataset + sum.non_distinct + sum.merged);
}

TEST_CASE("precision and summary") {
  Store empty_store;
  CHECK(pipeline_summary(empty_store) == PipelineSummary{});
  CHECK(code_of([&] { precision(empty_store); }) == ErrorCode::NoDecisions);

  Store s(four());
  CHECK(code_of([&] { precision(s); }) == ErrorCode::NoDecisions);
  s.apply(state(1, "m1", State::Confirmed, "A"));
  s.apply(state(2, "m2", State::NonDataset));
  s.apply(state(3, "m3", State::Unconfirmable));
  s.apply(state(4, "m4", State::NonDataset));
  CHECK(precision(s) == doctest::Approx(25.0));

  Store all(four());
  long seq = 0;
  for (auto id : {"m1", "m2", "m3", "m4"}) all.apply(state(++seq, id, State::Confirmed, std::string("D") + id));
  CHECK(precision(all) == doctest::Approx(100.0));
  auto sum = pipeline_summary(all);
  CHECK(sum.unique_datasets == 4);
  CHECK(sum.languages_covered == 3);

  Store partial(four());
  partial.apply(state(1, "m1", State::Confirmed, "A"));
  partial.apply(state(2, "m3", State::NonDataset));
  auto p = pipeline_summary(partial);
  CHECK(p.genuine == 1);
  CHECK(p.pending == 2);
}

TEST_CASE("non-distinct exclusions count as genuine mentions merged away") {
  Store s(four());
  s.apply(state(1, "m1", State::Confirmed, "A"));
  s.apply(state(2, "m2", State::NonDataset, std::nullopt, std::nullopt, std::string(kNonDistinct)));
  s.apply(state(3, "m3", State::NonDataset));
  auto sum = pipeline_summary(s);
  CHECK(sum.non_distinct == 1);
  CHECK(sum.non_dataset == 1);
  CHECK(sum.genuine == 2);
  CHECK(sum.merged_away == 1);
  CHECK(sum.unique_datasets == sum.genuine - sum.merged_away);
}

TEST_CASE("consolidation: empty store, idempotent, dangling merges impossible by construction") {
  Store s(four());
  CHECK(consolidate(s).empty());
  s.apply(state(1, "m1", State::Confirmed, "A"));
  s.apply(state(2, "m3", State::Merged, std::nullopt, make_dataset_id("A", "ind", "m1")));
  auto first = consolidate(s);
  auto second = consolidate(s);
  REQUIRE(first.size() == second.size());
  CHECK(first[0].member_mention_ids == second[0].member_mention_ids);
  CHECK(first[0].languages == std::set<std::string>{"ind", "khm"});
  CHECK(datasets_csv(first).starts_with("dataset_id,canonical_name,languages,n_mentions,emergence_year,accessibility\n"));
}

TEST_CASE("five-event ledger: replay equals live application") {
  testing::TempDir dir;
  LedgerFile file(dir / "decisions.log");
  Store live(four());
  auto a = make_dataset_id("A", "ind", "m1");
  std::vector<Event> events{state(1, "m1", State::Confirmed, "A"), state(2, "m2", State::Merged, std::nullopt, a),
                            state(3, "m3", State::Unconfirmable), state(4, "m4", State::NonDataset),
                            state(5, "m3", State::Merged, std::nullopt, a)};
  for (const auto& e : events) {
    live.check(e);
    file.append(e);
    live.apply(e);
  }
  auto replayed = replay(four(), file.load());
  CHECK(replayed.snapshot() == live.snapshot());
  CHECK(consolidate(replayed)[0].member_mention_ids.size() == 3);
}

TEST_CASE("reference ledger") {
  cli::Workspace ws(testing::fixture("reference"));
  auto corpus = cli::load_corpus(ws);
  CHECK(corpus.candidates.size() == 812);
  auto events = LedgerFile(ws.ledger()).load();
  auto store = replay(corpus.candidates, events);
  auto sum = pipeline_summary(store);
  CHECK(sum.total == 812);
  CHECK(sum.pending == 0);
  CHECK(sum.unconfirmable == 101);
  CHECK(sum.non_dataset == 44);
  CHECK(sum.genuine == 667);
  CHECK(sum.genuine == sum.total - sum.unconfirmable - sum.non_dataset);
  CHECK(sum.merged_away == 58);
  CHECK(sum.unique_datasets == 609);
  CHECK(sum.unique_datasets == sum.genuine - sum.merged_away);
  CHECK(sum.languages_covered == 53);
  CHECK(precision(store) == doctest::Approx(100.0 * 667 / 812).epsilon(1e-12));
  CHECK(std::abs(precision(store) - 82.14) <= 0.01);
  CHECK(consolidate(store).size() == 609);

  // Live application event by event matches a replay from empty.
  Store live(corpus.candidates);
  for (const auto& e : events) live.apply(e);
  CHECK(live.snapshot() == store.snapshot());
}
