#include "rdiaudit/pipeline.hpp"

#include <unistd.h>

#include <algorithm>
#include <set>
#include <sstream>

#include "rdiaudit/attribute_audit.hpp"
#include "rdiaudit/catalogue.hpp"
#include "rdiaudit/classifier.hpp"
#include "rdiaudit/discovery.hpp"
#include "rdiaudit/error.hpp"
#include "rdiaudit/lang_registry.hpp"
#include "rdiaudit/ledger.hpp"
#include "rdiaudit/rdi.hpp"
#include "rdiaudit/reporting.hpp"
#include "rdiaudit/url_probe.hpp"
#include "rdiaudit/util/csv.hpp"
#include "rdiaudit/util/digest.hpp"
#include "rdiaudit/util/files.hpp"
#include "rdiaudit/util/log.hpp"
#include "rdiaudit/util/text.hpp"
#include "rdiaudit/util/timefmt.hpp"
#include "rdiaudit/validation.hpp"

namespace rdiaudit::cli {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string now(const Services& s) { return s.clock ? s.clock() : utc_now_iso8601(); }

std::string rel(const Workspace& ws, const fs::path& p) { return p.lexically_relative(ws.root()).generic_string(); }

std::string inputs_digest(const std::vector<fs::path>& files, const json& params) {
  return sha256_hex(digest_files(files) + "\n" + params.dump());
}

bool marker_current(const Workspace& ws, Stage s, const std::string& digest) {
  auto m = ws.read_marker(s);
  if (!m || m->value("status", "") != "complete" || m->value("inputs", "") != digest) return false;
  auto outputs = m->value("outputs", json::object());
  for (const auto& [name, sha] : outputs.items()) {
    auto p = ws.root() / name;
    if (!files::exists(p) || sha256_hex(files::read_text(p)) != sha.get<std::string>()) return false;
  }
  return true;
}

void mark_complete(const Workspace& ws, Stage s, const std::string& digest, const std::vector<fs::path>& outputs,
                   const Services& services, json extra = json::object()) {
  json outs = json::object();
  for (const auto& p : outputs) outs[rel(ws, p)] = sha256_hex(files::read_text(p));
  extra["stage"] = std::string(to_string(s));
  extra["status"] = "complete";
  extra["inputs"] = digest;
  extra["outputs"] = outs;
  extra["completed_at"] = now(services);
  ws.write_marker(s, extra);
}

void require_marker(const Workspace& ws, Stage needed, Stage wanted) {
  auto m = ws.read_marker(needed);
  if (!m || m->value("status", "") != "complete") {
    throw Error(ErrorCode::MissingPrerequisite, std::string(to_string(wanted)) + " needs a completed " +
                                                    std::string(to_string(needed)) + " stage");
  }
}

void require_ledger(const Workspace& ws, Stage wanted) {
  if (!files::exists(ws.ledger())) {
    throw Error(ErrorCode::MissingPrerequisite,
                std::string(to_string(wanted)) + " needs a decision ledger at " + ws.ledger().string());
  }
}

StageResult skipped(Stage s) {
  StageResult r;
  r.stage = s;
  r.skipped = true;
  r.summary = std::string(to_string(s)) + ": up to date";
  return r;
}

struct Inputs {
  lang::LanguageRegistry registry;
  lang::RuleSet rules;
};

Inputs load_inputs(const Workspace& ws) {
  Inputs in;
  in.registry = lang::LanguageRegistry::load(ws.languages_csv());
  in.rules = lang::RuleSet::load(ws.rules_tsv());
  return in;
}

catalogue::CatalogueCounts count_catalogues(const Workspace& ws, const Inputs& in, const Config& c) {
  lang::Normalizer normalizer(in.registry, in.rules);
  auto entries = catalogue::load_catalogue(ws.lre_csv(), catalogue::Source::LreMap);
  auto ldc = catalogue::load_catalogue(ws.ldc_csv(), catalogue::Source::Ldc);
  entries.insert(entries.end(), std::make_move_iterator(ldc.begin()), std::make_move_iterator(ldc.end()));
  catalogue::CountOptions opts;
  opts.types = c.types;
  return catalogue::count_by_language(entries, normalizer, opts);
}

json types_json(const Config& c) { return json(c.types); }

// --- ingest -----------------------------------------------------------------

StageResult run_ingest(const Workspace& ws, const Config& c, const Services& services) {
  std::vector<fs::path> ins{ws.languages_csv(), ws.rules_tsv(), ws.lre_csv(), ws.ldc_csv()};
  auto digest = inputs_digest(ins, {{"types", types_json(c)}});
  if (!c.force && marker_current(ws, Stage::Ingest, digest)) return skipped(Stage::Ingest);

  auto in = load_inputs(ws);
  auto counts = count_catalogues(ws, in, c);
  std::ostringstream counts_out, exc_out;
  catalogue::write_counts_csv(counts_out, counts, in.registry);
  catalogue::write_exceptions_csv(exc_out, counts);
  auto counts_path = ws.reports() / "counts.csv";
  auto exc_path = ws.reports() / "exceptions.csv";
  files::write_atomic(counts_path, counts_out.str());
  files::write_atomic(exc_path, exc_out.str());
  mark_complete(ws, Stage::Ingest, digest, {counts_path, exc_path}, services, {{"rules_version", in.rules.version}});

  StageResult r;
  r.stage = Stage::Ingest;
  r.summary = "ingest: " + std::to_string(in.registry.size()) + " languages, " +
              std::to_string(counts.exceptions.size()) + " exception rows";
  r.details = {{"languages", in.registry.size()}, {"exceptions", counts.exceptions.size()}};
  return r;
}

// --- rdi --------------------------------------------------------------------

StageResult run_rdi(const Workspace& ws, const Config& c, const Services& services) {
  require_marker(ws, Stage::Ingest, Stage::Rdi);
  auto counts_path = ws.reports() / "counts.csv";
  std::vector<fs::path> ins{ws.languages_csv(), counts_path};
  auto digest = inputs_digest(ins, {{"threshold", c.threshold}});
  if (!c.force && marker_current(ws, Stage::Rdi, digest)) return skipped(Stage::Rdi);

  auto registry = lang::LanguageRegistry::load(ws.languages_csv());
  auto counts = catalogue::read_counts_csv(files::read_text(counts_path));
  auto entries = rdi::build_entries(registry, counts);
  auto low = rdi::low_visibility_filter(entries, c.threshold);
  auto edges = rdi::default_bin_edges();
  auto dist = rdi::distribution_summary(entries, edges);

  std::ostringstream rdi_out, low_out;
  rdi::write_rdi_csv(rdi_out, entries);
  csv::write_row(low_out, {"iso639_3", "name", "avg_rdi"});
  for (const auto& e : low) csv::write_row(low_out, {e.iso639_3, e.name, rdi::display(e.avg_catalogue_rdi)});

  auto rdi_path = ws.reports() / "rdi.csv";
  auto low_path = ws.reports() / "low_visibility.csv";
  auto hist_path = ws.reports() / "histogram.csv";
  files::write_atomic(rdi_path, rdi_out.str());
  files::write_atomic(low_path, low_out.str());
  files::write_atomic(hist_path, report::histogram_export(dist));
  mark_complete(ws, Stage::Rdi, digest, {rdi_path, low_path, hist_path}, services);

  StageResult r;
  r.stage = Stage::Rdi;
  r.summary = "rdi: " + std::to_string(entries.size()) + " languages, " + std::to_string(low.size()) +
              " below " + text::format_shortest(c.threshold) + ", " + std::to_string(dist.zero_count) + " at zero";
  r.details = {{"languages", entries.size()},
               {"low_visibility", low.size()},
               {"zero", dist.zero_count},
               {"over_one", dist.over_one_count}};
  return r;
}

// --- discover ---------------------------------------------------------------

std::vector<std::string> target_languages(const Workspace& ws, const Config& c,
                                          const lang::LanguageRegistry& registry) {
  std::vector<std::string> out;
  if (!c.languages.empty()) {
    for (const auto& code : c.languages) {
      if (!registry.contains(code)) throw Error(ErrorCode::ConfigError, "unknown language code " + code);
      if (std::find(out.begin(), out.end(), code) == out.end()) out.push_back(code);
    }
    return out;
  }
  auto table = csv::Table::from_rows(csv::parse(files::read_text(ws.reports() / "low_visibility.csv")));
  auto col = table.column("iso639_3");
  if (!col) throw Error(ErrorCode::MalformedRecord, "low_visibility.csv lacks iso639_3");
  for (const auto& row : table.rows()) out.push_back(row.fields.at(*col));
  return out;
}

std::shared_ptr<http::Transport> or_real(const std::shared_ptr<http::Transport>& t) {
  return t ? t : std::make_shared<http::HttplibTransport>();
}

StageResult run_discover(const Workspace& ws, const Config& c, const Services& services) {
  require_marker(ws, Stage::Rdi, Stage::Discover);
  auto registry = lang::LanguageRegistry::load(ws.languages_csv());
  auto languages = target_languages(ws, c, registry);
  json params = {{"languages", languages}, {"k", c.k}, {"scholar_url", c.scholar_url}};
  auto digest = inputs_digest({ws.languages_csv(), ws.reports() / "low_visibility.csv"}, params);
  if (!c.force && marker_current(ws, Stage::Discover, digest)) return skipped(Stage::Discover);

  discovery::ScholarConfig sc;
  sc.base_url = c.scholar_url;
  sc.api_key = c.scholar_api_key;
  sc.replay = c.replay;
  auto sleeper = services.sleeper ? services.sleeper : discovery::real_sleeper();
  auto cache = std::make_shared<discovery::ResponseCache>(ws.api_cache());
  auto limiter = std::make_shared<discovery::RateLimiter>(c.scholar_rps, sleeper);
  std::shared_ptr<http::Transport> transport = c.replay ? services.scholar : or_real(services.scholar);
  discovery::ScholarClient client(sc, transport, cache, limiter, sleeper);

  discovery::DiscoveryConfig dc;
  dc.k = c.k;
  dc.workers = c.workers;
  auto result = discovery::run_discovery(client, registry, languages, dc);

  // Keep candidates of languages outside this run so earlier ledger
  // decisions still resolve; replace the ones that were re-queried.
  std::set<std::string> succeeded;
  for (const auto& run : result.runs) {
    if (!run.error) succeeded.insert(run.language);
  }
  std::vector<CandidateMention> merged;
  PaperIndex papers;
  if (files::exists(ws.candidates())) {
    auto old = load_corpus(ws);
    papers = std::move(old.papers);
    for (auto& m : old.candidates) {
      if (!succeeded.contains(m.language)) merged.push_back(std::move(m));
    }
  }
  for (const auto& m : result.candidates) merged.push_back(m);
  for (const auto& [id, p] : result.papers) {
    auto [it, inserted] = papers.emplace(id, p);
    if (!inserted) discovery::merge_paper(it->second, p);
  }
  std::sort(merged.begin(), merged.end(), [](const CandidateMention& a, const CandidateMention& b) {
    return std::tie(a.language, a.mention_id) < std::tie(b.language, b.mention_id);
  });

  // Papers file holds only what candidates reference.
  PaperIndex referenced;
  for (const auto& m : merged) {
    for (const auto* p : {&m.context.citing, &m.context.cited}) {
      auto it = papers.find(p->paper_id);
      referenced.emplace(p->paper_id, it == papers.end() ? *p : it->second);
    }
  }
  files::write_atomic(ws.papers(), discovery::papers_ndjson(referenced));
  files::write_atomic(ws.candidates(), discovery::candidates_ndjson(merged));
  if (!files::exists(ws.ledger())) files::write_atomic(ws.ledger(), "");

  StageResult r;
  r.stage = Stage::Discover;
  json runs = json::array();
  for (const auto& run : result.runs) {
    json j = {{"language", run.language},
              {"papers", run.papers},
              {"contexts", run.contexts},
              {"candidates", run.candidates}};
    if (run.error) j["error"] = *run.error;
    runs.push_back(j);
  }
  r.details = {{"runs", runs},
               {"candidates", merged.size()},
               {"network_requests", client.network_requests()},
               {"cache_hits", client.cache_hits()}};
  if (result.ok()) {
    mark_complete(ws, Stage::Discover, digest, {ws.candidates(), ws.papers()}, services);
  } else {
    ws.clear_marker(Stage::Discover);
    r.exit_code = 1;
  }
  r.summary = "discover: " + std::to_string(languages.size()) + " languages, " + std::to_string(result.candidates.size()) +
              " candidates" + (result.ok() ? "" : " (some languages failed)");
  return r;
}

// --- classify ---------------------------------------------------------------

/// Serves nothing; any request is a replay miss.
class ReplayOnlyTransport : public http::Transport {
 public:
  http::Outcome send(const http::Request& req) override {
    throw Error(ErrorCode::ReplayMiss, "replay mode: no cached verdict for request to " + req.url);
  }
};

StageResult run_classify(const Workspace& ws, const Config& c, const Services& services) {
  if (!files::exists(ws.candidates())) {
    throw Error(ErrorCode::MissingPrerequisite, "classify needs discover output at " + ws.candidates().string());
  }
  classify::BackendConfig bc;
  bc.endpoint = c.llm_endpoint;
  bc.model = c.llm_model;
  bc.api_key = c.llm_api_key;
  bc.fallback = c.llm_fallback && !c.replay;
  bc.max_in_flight = c.workers;
  classify::validate(bc);
  json params = {{"endpoint", bc.endpoint.empty() ? "heuristic" : bc.model}, {"template", bc.template_id}};
  auto digest = inputs_digest({ws.candidates(), ws.papers()}, params);
  if (!c.force && marker_current(ws, Stage::Classify, digest)) return skipped(Stage::Classify);

  auto registry = lang::LanguageRegistry::load(ws.languages_csv());
  classify::LanguageNames names;
  for (const auto& rec : registry.records()) names.emplace(rec.iso639_3, rec.canonical_name);

  auto cache = std::make_shared<classify::VerdictCache>();
  if (files::exists(ws.llm_cache())) cache->load_ndjson(files::read_text(ws.llm_cache()));
  std::shared_ptr<http::Transport> transport;
  if (!bc.endpoint.empty()) {
    transport = c.replay ? std::shared_ptr<http::Transport>(std::make_shared<ReplayOnlyTransport>())
                         : or_real(services.llm);
  }
  classify::Classifier classifier(bc, transport, cache);

  auto corpus = load_corpus(ws);
  auto batch = classify::classify_batch(classifier, corpus.candidates, names);
  files::write_atomic(ws.llm_cache(), cache->to_ndjson());

  std::vector<json> records;
  long positive = 0;
  for (const auto& m : corpus.candidates) {
    if (!m.verdict) continue;
    if (m.verdict->is_dataset) ++positive;
    records.push_back({{"mention_id", m.mention_id}, {"verdict", verdict_to_json(*m.verdict)}});
  }
  std::sort(records.begin(), records.end(),
            [](const json& a, const json& b) { return a["mention_id"] < b["mention_id"]; });
  files::write_atomic(ws.verdicts(), to_ndjson(records));

  StageResult r;
  r.stage = Stage::Classify;
  r.details = {{"classified", records.size()},
               {"dataset", positive},
               {"failures", batch.failures},
               {"remote_calls", classifier.remote_calls()}};
  r.summary = "classify: " + std::to_string(records.size()) + " verdicts, " + std::to_string(positive) +
              " dataset, " + std::to_string(batch.failures) + " failures";
  if (batch.failures == 0) {
    mark_complete(ws, Stage::Classify, digest, {ws.verdicts()}, services);
  } else {
    ws.clear_marker(Stage::Classify);
    r.exit_code = 1;
  }
  return r;
}

// --- audit-links ------------------------------------------------------------

StageResult run_audit(const Workspace& ws, const Config& c, const Services& services) {
  require_ledger(ws, Stage::AuditLinks);
  if (c.replay) throw Error(ErrorCode::ConfigError, "audit-links probes live URLs and cannot run in replay mode");
  auto digest = inputs_digest({ws.candidates(), ws.ledger()}, json::object());
  auto marker = ws.read_marker(Stage::AuditLinks);
  if (!c.force && marker_current(ws, Stage::AuditLinks, digest)) return skipped(Stage::AuditLinks);

  // An interrupted run leaves an in-progress marker; resuming reuses its id
  // and skips URLs that already have a probe from that run.
  std::string run_id;
  if (marker && marker->value("status", "") == "running" && marker->value("inputs", "") == digest) {
    run_id = marker->value("run", "");
  }
  if (run_id.empty()) run_id = short_digest({digest, now(services), std::to_string(::getpid())});
  ws.write_marker(Stage::AuditLinks, {{"stage", "audit-links"}, {"status", "running"}, {"inputs", digest}, {"run", run_id}});

  auto corpus = load_corpus(ws);
  auto store = validation::replay(corpus.candidates, validation::LedgerFile(ws.ledger()).load());
  auto records = validation::consolidate(store);

  std::set<std::pair<std::string, std::string>> done;
  for (const auto& p : audit::load_probes(ws.probes())) {
    if (p.run_id == run_id) done.emplace(p.dataset_id, p.url);
  }
  std::vector<audit::ProbeJob> jobs;
  for (const auto& rec : records) {
    std::vector<std::string> urls;
    for (const auto& mid : rec.member_mention_ids) {
      for (auto& u : audit::extract_urls(store.candidate(mid)->context.context_text)) {
        if (std::find(urls.begin(), urls.end(), u) == urls.end()) urls.push_back(std::move(u));
      }
    }
    for (auto& u : urls) {
      if (!done.contains({rec.dataset_id, u})) jobs.push_back({rec.dataset_id, std::move(u)});
    }
  }

  audit::ProbePolicy policy;
  policy.read_timeout = std::chrono::seconds(c.probe_timeout_s);
  if (services.clock) policy.clock = services.clock;
  auto transport = or_real(services.probe);
  files::repair_torn_tail(ws.probes());
  audit::probe_all(*transport, jobs, policy, c.max_in_flight, c.per_host, [&](const audit::UrlProbe& p) {
    auto copy = p;
    copy.run_id = run_id;
    files::append_line_durable(ws.probes(), audit::probe_to_json(copy).dump());
  });

  auto inventory = audit::build_inventory(store, corpus.papers, audit::load_probes(ws.probes()));
  auto acc_path = ws.reports() / "accessibility.csv";
  files::write_atomic(acc_path, audit::accessibility_csv(inventory));
  mark_complete(ws, Stage::AuditLinks, digest, {acc_path}, services, {{"run", run_id}});

  StageResult r;
  r.stage = Stage::AuditLinks;
  r.details = {{"probed", jobs.size()}, {"resumed_skips", done.size()}, {"summary", inventory.summary.to_json()}};
  r.summary = "audit-links: " + std::to_string(jobs.size()) + " probes, " + std::to_string(inventory.summary.open) +
              " open, " + std::to_string(inventory.summary.not_open) + " not open, " +
              std::to_string(inventory.summary.unprobed) + " without URLs";
  return r;
}

// --- report -----------------------------------------------------------------

std::vector<fs::path> report_inputs(const Workspace& ws) {
  return {ws.languages_csv(), ws.rules_tsv(), ws.lre_csv(),  ws.ldc_csv(),
          ws.candidates(),    ws.papers(),    ws.ledger(),   ws.probes()};
}

StageResult run_report(const Workspace& ws, const Config& c, const Services& services) {
  require_ledger(ws, Stage::Report);
  json params = {{"threshold", c.threshold}, {"types", types_json(c)}};
  auto digest = inputs_digest(report_inputs(ws), params);
  if (!c.force && marker_current(ws, Stage::Report, digest)) return skipped(Stage::Report);

  auto in = load_inputs(ws);
  auto counts = count_catalogues(ws, in, c);
  auto entries = rdi::build_entries(in.registry, counts);

  auto corpus = load_corpus(ws);
  auto events = validation::LedgerFile(ws.ledger()).load();
  auto store = validation::replay(std::move(corpus.candidates), events);
  auto inventory = audit::build_inventory(store, corpus.papers, audit::load_probes(ws.probes()));

  rdi::attach_mined_counts(entries, report::mined_counts(inventory.records));
  report::ReportBundle bundle;
  bundle.comparison = report::comparison_table(entries);
  bundle.distribution = rdi::distribution_summary(entries, rdi::default_bin_edges());
  bundle.low_visibility = static_cast<long>(rdi::low_visibility_filter(entries, c.threshold).size());
  bundle.trends = report::emergence_usage_trends(inventory);
  bundle.flows = report::flow_export(inventory.records);
  bundle.pipeline = validation::pipeline_summary(store);
  bundle.attributes = inventory.summary;
  try {
    bundle.precision = validation::precision(store);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::NoDecisions) throw;
  }

  report::ReportMetadata meta;
  meta.snapshot_id = short_digest({digest_files(report_inputs(ws)), params.dump()});
  meta.rules_version = in.rules.version;
  meta.ledger_revision = store.revision();
  if (!events.empty()) {
    meta.ledger_first_ts = events.front().ts;
    meta.ledger_last_ts = events.back().ts;
  }
  meta.threshold = c.threshold;

  std::vector<fs::path> outs{ws.reports() / "comparison.csv", ws.reports() / "trends.csv",
                             ws.reports() / "flows.csv",      ws.reports() / "histogram.csv",
                             ws.reports() / "datasets.csv",   ws.reports() / "accessibility.csv",
                             ws.reports() / "report.json"};
  files::write_atomic(outs[0], report::comparison_csv(bundle.comparison));
  files::write_atomic(outs[1], report::trends_csv(bundle.trends));
  files::write_atomic(outs[2], report::flows_csv(bundle.flows));
  files::write_atomic(outs[3], report::histogram_export(bundle.distribution));
  files::write_atomic(outs[4], validation::datasets_csv(inventory.records));
  files::write_atomic(outs[5], audit::accessibility_csv(inventory));
  files::write_atomic(outs[6], report::report_json(bundle, meta).dump(2) + "\n");
  mark_complete(ws, Stage::Report, digest, outs, services, {{"snapshot_id", meta.snapshot_id}});

  StageResult r;
  r.stage = Stage::Report;
  r.details = {{"snapshot_id", meta.snapshot_id},
               {"datasets", inventory.records.size()},
               {"ledger_revision", store.revision()}};
  r.summary = "report: snapshot " + meta.snapshot_id + ", " + std::to_string(inventory.records.size()) +
              " datasets, written to " + ws.reports().string();
  return r;
}

}  // namespace

std::string snapshot_id(const Workspace& ws) { return short_digest({digest_files(report_inputs(ws))}); }

json workspace_status(const Workspace& ws) {
  json stages = json::object();
  for (auto s : {Stage::Ingest, Stage::Rdi, Stage::Discover, Stage::Classify, Stage::AuditLinks, Stage::Report}) {
    auto m = ws.read_marker(s);
    stages[std::string(to_string(s))] = m ? json(m->value("status", "unknown")) : json(nullptr);
  }
  json out = {{"workspace", ws.root().string()}, {"stages", stages}};
  out["ledger"] = {{"present", files::exists(ws.ledger())}};
  if (files::exists(ws.ledger())) {
    auto events = validation::LedgerFile(ws.ledger()).load();
    out["ledger"]["revision"] = events.size();
    if (files::exists(ws.candidates())) {
      auto corpus = load_corpus(ws);
      auto store = validation::replay(std::move(corpus.candidates), events);
      out["summary"] = validation::pipeline_summary(store).to_json();
    }
  }
  return out;
}

StageResult run_stage(Stage stage, const Config& config, const Services& services) {
  Workspace ws(config.workspace);
  if (stage == Stage::Status) {
    StageResult r;
    r.stage = stage;
    r.details = workspace_status(ws);
    r.summary = r.details.dump(2);
    return r;
  }
  if (stage == Stage::Serve) {
    throw Error(ErrorCode::ConfigError, "serve runs through the review service, not run_stage");
  }
  if (!fs::is_directory(ws.root())) {
    throw Error(ErrorCode::MissingPrerequisite, "workspace " + ws.root().string() + " does not exist");
  }
  files::FileLock lock(ws.lock_file());
  StageResult r;
  switch (stage) {
    case Stage::Ingest: r = run_ingest(ws, config, services); break;
    case Stage::Rdi: r = run_rdi(ws, config, services); break;
    case Stage::Discover: r = run_discover(ws, config, services); break;
    case Stage::Classify: r = run_classify(ws, config, services); break;
    case Stage::AuditLinks: r = run_audit(ws, config, services); break;
    case Stage::Report: r = run_report(ws, config, services); break;
    default: break;
  }
  log::debug(r.summary);
  return r;
}

}  // namespace rdiaudit::cli
