#include <doctest.h>

#include <cstdlib>

#include "rdiaudit/attribute_audit.hpp"
#include "rdiaudit/error.hpp"
#include "rdiaudit/ledger.hpp"
#include "rdiaudit/pipeline.hpp"
#include "rdiaudit/util/files.hpp"
#include "rdiaudit/validation.hpp"
#include "test_support.hpp"

using namespace rdiaudit;
using namespace rdiaudit::cli;
using nlohmann::json;
namespace fs = std::filesystem;

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

Services fixed_clock() {
  Services s;
  s.clock = [] { return std::string("2025-05-01T12:00:00Z"); };
  s.sleeper = [](std::chrono::milliseconds) {};
  return s;
}

Config demo_config(const fs::path& ws) {
  Config c;
  c.workspace = ws;
  c.replay = true;
  c.languages = {"tsn", "npi"};
  c.scholar_url = "http://127.0.0.1:9";  // never contacted in replay
  c.workers = 2;
  return c;
}

// Set RDIAUDIT_UPDATE_GOLDEN=1 to rewrite the golden files.
void check_golden(const std::string& name, const std::string& actual) {
  auto path = testing::source_dir() / "tests" / "golden" / name;
  if (std::getenv("RDIAUDIT_UPDATE_GOLDEN")) {
    files::write_atomic(path, actual);
    MESSAGE("updated " << path.string());
    return;
  }
  REQUIRE(files::exists(path));
  CHECK(files::read_text(path) == actual);
}

const std::vector<std::string> kDemoOutputs{
    "cache/candidates.jsonl", "cache/papers.jsonl",    "cache/verdicts.jsonl",   "reports/counts.csv",
    "reports/rdi.csv",        "reports/comparison.csv", "reports/trends.csv",     "reports/flows.csv",
    "reports/histogram.csv",  "reports/datasets.csv",  "reports/accessibility.csv", "reports/report.json"};

std::map<std::string, std::string> run_demo(const fs::path& ws) {
  testing::copy_tree(testing::fixture("demo/workspace"), ws);
  auto c = demo_config(ws);
  auto svc = fixed_clock();
  CHECK(run_stage(Stage::Ingest, c, svc).exit_code == 0);
  CHECK(run_stage(Stage::Rdi, c, svc).exit_code == 0);
  auto d = run_stage(Stage::Discover, c, svc);
  CHECK(d.exit_code == 0);
  CHECK(d.details["network_requests"] == 0);
  CHECK(d.details["candidates"] == 91);
  auto cl = run_stage(Stage::Classify, c, svc);
  CHECK(cl.exit_code == 0);
  CHECK(cl.details["classified"] == 91);
  CHECK(cl.details["remote_calls"] == 0);
  CHECK(run_stage(Stage::Report, c, svc).exit_code == 0);
  std::map<std::string, std::string> out;
  for (const auto& rel : kDemoOutputs) out[rel] = files::read_text(ws / rel);
  return out;
}

}  // namespace

TEST_CASE("demo workspace replays byte-identically") {
  testing::TempDir a, b;
  auto first = run_demo(a / "ws");
  auto second = run_demo(b / "ws");
  for (const auto& rel : kDemoOutputs) {
    INFO(rel);
    CHECK(first[rel] == second[rel]);
  }
  check_golden("demo_report.json", first["reports/report.json"]);

  auto report = json::parse(first["reports/report.json"]);
  CHECK(report["validation"]["total"] == 91);
  auto store = validation::replay(load_corpus(Workspace(a / "ws")).candidates,
                                  validation::LedgerFile(Workspace(a / "ws").ledger()).load());
  CHECK(report["validation"] == validation::pipeline_summary(store).to_json());

  // A second run of every stage is a no-op.
  auto c = demo_config(a / "ws");
  for (auto s : {Stage::Ingest, Stage::Rdi, Stage::Discover, Stage::Classify, Stage::Report}) {
    CHECK(run_stage(s, c, fixed_clock()).skipped);
  }
}

TEST_CASE("replay without recordings is a replay miss") {
  testing::TempDir dir;
  auto ws = dir / "ws";
  testing::copy_tree(testing::fixture("demo/workspace"), ws);
  auto c = demo_config(ws);
  run_stage(Stage::Ingest, c, fixed_clock());
  run_stage(Stage::Rdi, c, fixed_clock());
  c.languages = {"khm"};
  auto r = run_stage(Stage::Discover, c, fixed_clock());
  CHECK(r.exit_code != 0);
  CHECK(r.details["runs"][0].contains("error"));
  CHECK_FALSE(Workspace(ws).read_marker(Stage::Discover));

  c.languages = {"zzz"};
  CHECK(code_of([&] { run_stage(Stage::Discover, c, fixed_clock()); }) == ErrorCode::ConfigError);
}

TEST_CASE("rediscovering one language keeps the other's candidates") {
  testing::TempDir dir;
  auto ws = dir / "ws";
  run_demo(ws);
  auto before = load_corpus(Workspace(ws)).candidates;
  auto c = demo_config(ws);
  c.languages = {"tsn"};
  auto r = run_stage(Stage::Discover, c, fixed_clock());
  CHECK(r.exit_code == 0);
  auto after = load_corpus(Workspace(ws)).candidates;
  CHECK(after.size() == before.size());
  std::set<std::string> a, b;
  for (const auto& m : before) a.insert(m.mention_id);
  for (const auto& m : after) b.insert(m.mention_id);
  CHECK(a == b);
}

TEST_CASE("reference report") {
  testing::TempDir dir;
  auto ws = dir / "ws";
  testing::copy_tree(testing::fixture("reference"), ws);
  Config c;
  c.workspace = ws;
  auto r = run_stage(Stage::Report, c, fixed_clock());
  CHECK(r.exit_code == 0);
  CHECK(r.details["datasets"] == 609);
  auto text = files::read_text(Workspace(ws).reports() / "report.json");
  check_golden("reference_report.json", text);
  auto j = json::parse(text);
  CHECK(j["validation"]["genuine"] == 667);
  CHECK(j["validation"]["unique_datasets"] == 609);
  CHECK(j["validation"]["languages_covered"] == 53);
  CHECK(j["precision_pct"] == "82.14");
  CHECK(j["attributes"]["unique"] == 549);
  CHECK(j["attributes"]["open"] == 356);
  CHECK(j["attributes"]["not_open"] == 253);
  CHECK(j["comparison"]["rows"].size() == 53);
  CHECK(j["distribution"]["zero"] == 118);
  CHECK(j["distribution"]["over_one"] == 21);
  CHECK(j["distribution"]["low_visibility"] == 141);
  CHECK(j["metadata"]["ledger_revision"] == validation::LedgerFile(Workspace(ws).ledger()).load().size());

  // Report does not depend on earlier stage markers and is stable.
  Config forced = c;
  forced.force = true;
  run_stage(Stage::Report, forced, fixed_clock());
  CHECK(files::read_text(Workspace(ws).reports() / "report.json") == text);

  auto status = workspace_status(Workspace(ws));
  CHECK(status["summary"]["total"] == 812);
  CHECK(status["stages"]["report"] == "complete");

  // The comparison section, recomputed from raw inputs and the ledger,
  // carries the same displayed values as the comparison table fixture.
  std::map<std::string, json> rows;
  for (const auto& row : j["comparison"]["rows"]) rows[row["iso639_3"]] = row;
  for (const auto& want : testing::load_comparison_fixture()) {
    INFO(want.iso639_3);
    REQUIRE(rows.count(want.iso639_3));
    const auto& got = rows[want.iso639_3];
    CHECK(got["mined"]["count"] == want.mined);
    CHECK(got["mined"]["rdi"] == want.mined_rdi);
    CHECK(got["lre_map"]["count"] == want.lre);
    CHECK(got["lre_map"]["rdi"] == want.lre_rdi);
    CHECK(got["ldc"]["count"] == want.ldc);
    CHECK(got["ldc"]["rdi"] == want.ldc_rdi);
    CHECK(got["avg_catalogue_rdi"] == want.avg_rdi);
    CHECK(got["pattern"] == want.pattern);
  }
  CHECK(j["comparison"]["absent_in_catalogues"] == 35);
  CHECK(j["comparison"]["undercounted"] == 18);

  // Another ledger event changes the snapshot and the report.
  auto events = validation::LedgerFile(Workspace(ws).ledger()).load();
  auto store = validation::replay(load_corpus(Workspace(ws)).candidates, events);
  validation::Event e;
  e.seq = store.revision() + 1;
  e.ts = "2025-06-01T00:00:00Z";
  e.annotator = "t";
  e.payload = validation::EmergenceReview{store.datasets().begin()->first, {}};
  validation::LedgerFile(Workspace(ws).ledger()).append(e);
  auto again = run_stage(Stage::Report, c, fixed_clock());
  CHECK_FALSE(again.skipped);
  CHECK(again.details["snapshot_id"] != r.details["snapshot_id"]);
}

TEST_CASE("audit-links resumes an interrupted run") {
  testing::TempDir dir;
  auto ws = dir / "ws";
  run_demo(ws);
  Workspace w(ws);
  auto c = demo_config(ws);
  c.replay = false;

  auto transport = std::make_shared<testing::ScriptedTransport>([](const http::Request& r) {
    if (r.url.find("tswana-treebank") != std::string::npos) return testing::respond(404, "gone");
    return testing::respond(200, "PK\x03\x04", {{"Content-Type", "application/zip"}});
  });
  auto svc = fixed_clock();
  svc.probe = transport;
  auto full = run_stage(Stage::AuditLinks, c, svc);
  long total = full.details["probed"];
  REQUIRE(total >= 2);
  auto complete_marker = *w.read_marker(Stage::AuditLinks);
  auto probes = audit::load_probes(w.probes());
  REQUIRE(static_cast<long>(probes.size()) == total);
  auto reference_csv = files::read_text(w.reports() / "accessibility.csv");
  CHECK(run_stage(Stage::AuditLinks, c, svc).skipped);

  // Crash state: half the probes written, a torn line, marker still running.
  std::string run_id = complete_marker["run"];
  std::string partial;
  long half = total / 2;
  for (long i = 0; i < half; ++i) partial += audit::probe_to_json(probes[i]).dump() + "\n";
  partial += "{\"dataset\":\"tor";
  files::write_atomic(w.probes(), partial);
  w.write_marker(Stage::AuditLinks,
                 {{"stage", "audit-links"}, {"status", "running"}, {"inputs", complete_marker["inputs"]}, {"run", run_id}});

  auto before = transport->count();
  auto resumed = run_stage(Stage::AuditLinks, c, svc);
  CHECK(resumed.details["resumed_skips"] == half);
  CHECK(resumed.details["probed"] == total - half);
  CHECK(transport->count() - before == total - half);
  auto after = audit::load_probes(w.probes());
  CHECK(static_cast<long>(after.size()) == total);
  for (const auto& p : after) CHECK(p.run_id == run_id);
  CHECK(files::read_text(w.reports() / "accessibility.csv") == reference_csv);
  CHECK(w.read_marker(Stage::AuditLinks)->at("status") == "complete");

  c.replay = true;
  c.force = true;
  CHECK(code_of([&] { run_stage(Stage::AuditLinks, c, svc); }) == ErrorCode::ConfigError);
}

TEST_CASE("classify with an unreachable endpoint and no fallback records failures") {
  testing::TempDir dir;
  auto ws = dir / "ws";
  run_demo(ws);
  auto c = demo_config(ws);
  c.replay = false;
  c.llm_endpoint = "http://127.0.0.1:9/v1/chat/completions";
  c.llm_fallback = false;
  auto svc = fixed_clock();
  svc.llm = std::make_shared<testing::ScriptedTransport>(
      [](const http::Request&) { return testing::fail(http::Failure::Connect); });
  auto r = run_stage(Stage::Classify, c, svc);
  CHECK(r.exit_code != 0);
  CHECK(r.details["failures"] == 91);
  CHECK_FALSE(Workspace(ws).read_marker(Stage::Classify));

  c.llm_fallback = true;
  auto ok = run_stage(Stage::Classify, c, svc);
  CHECK(ok.exit_code == 0);
  CHECK(ok.details["failures"] == 0);
}
