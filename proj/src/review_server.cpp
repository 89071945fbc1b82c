#include "rdiaudit/review_server.hpp"

#include <httplib.h>

#include <algorithm>
#include <cctype>
#include <mutex>
#include <set>

#include "rdiaudit/attribute_audit.hpp"
#include "rdiaudit/classifier.hpp"
#include "rdiaudit/lang_registry.hpp"
#include "rdiaudit/util/files.hpp"
#include "rdiaudit/util/log.hpp"
#include "rdiaudit/util/text.hpp"
#include "rdiaudit/util/timefmt.hpp"

namespace rdiaudit::review {

namespace fs = std::filesystem;
using validation::State;

namespace {

std::set<std::string> tokens(std::string_view s) {
  std::set<std::string> out;
  std::string cur;
  for (char ch : text::casefold(s)) {
    if (std::isalnum(static_cast<unsigned char>(ch)) || static_cast<unsigned char>(ch) >= 0x80) {
      cur.push_back(ch);
    } else if (!cur.empty()) {
      out.insert(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.insert(std::move(cur));
  return out;
}

double jaccard(const std::set<std::string>& a, const std::set<std::string>& b) {
  if (a.empty() || b.empty()) return 0.0;
  std::size_t common = 0;
  for (const auto& t : a) common += b.count(t);
  return static_cast<double>(common) / static_cast<double>(a.size() + b.size() - common);
}

json opt_json(const std::optional<std::string>& v) { return v ? json(*v) : json(nullptr); }

std::optional<std::string> opt_string(const json& body, const char* key) {
  auto it = body.find(key);
  if (it == body.end() || it->is_null()) return std::nullopt;
  if (!it->is_string()) throw Error(ErrorCode::PreconditionViolation, std::string(key) + " must be a string");
  return it->get<std::string>();
}

json status_json(const validation::MentionStatus& s) {
  return {{"state", std::string(validation::to_string(s.state))},
          {"target", opt_json(s.target)},
          {"reason", opt_json(s.reason)},
          {"canonical_name", opt_json(s.canonical_name)},
          {"last_seq", s.last_seq}};
}

double queue_score(const CandidateMention& m) { return m.verdict ? classify::dataset_score(*m.verdict) : 0.5; }

}  // namespace

std::vector<MergeSuggestion> suggest_merge_targets(const validation::Store& store, const CandidateMention& mention,
                                                   std::size_t limit) {
  bool have_name = mention.extracted_name && !text::trim(*mention.extracted_name).empty();
  auto query = text::casefold(have_name ? *mention.extracted_name : mention.context.context_text);
  auto query_tokens = tokens(query);
  std::vector<MergeSuggestion> out;
  for (const auto& [id, ds] : store.datasets()) {
    if (ds.founder == mention.mention_id) continue;
    auto name = text::casefold(ds.canonical_name);
    MergeSuggestion s{id, ds.canonical_name, 0.0, false};
    if (!name.empty() && (query.find(name) != std::string::npos || (have_name && name.find(query) != std::string::npos))) {
      s.substring = true;
      s.score = 1.0;
    } else {
      s.score = jaccard(query_tokens, tokens(name));
    }
    if (s.substring || s.score > 0.0) out.push_back(std::move(s));
  }
  std::sort(out.begin(), out.end(), [](const MergeSuggestion& a, const MergeSuggestion& b) {
    if (a.substring != b.substring) return a.substring;
    if (a.score != b.score) return a.score > b.score;
    return a.dataset_id < b.dataset_id;
  });
  if (out.size() > limit) out.resize(limit);
  return out;
}

ReviewService::ReviewService(std::vector<CandidateMention> candidates, fs::path ledger_path,
                             std::vector<audit::UrlProbe> probes, ServiceOptions options)
    : store_(candidates), ledger_(std::move(ledger_path)), candidates_(std::move(candidates)),
      options_(std::move(options)) {
  for (const auto& e : ledger_.load()) store_.apply(e);
  for (auto& p : probes) probes_[p.dataset_id].push_back(std::move(p));
}

std::unique_ptr<ReviewService> ReviewService::open(const cli::Workspace& ws, ServiceOptions options) {
  if (!files::exists(ws.ledger())) {
    throw Error(ErrorCode::MissingPrerequisite, "serve needs a decision ledger at " + ws.ledger().string());
  }
  auto corpus = cli::load_corpus(ws);
  if (options.language_names.empty() && files::exists(ws.languages_csv())) {
    auto registry = lang::LanguageRegistry::load(ws.languages_csv());
    for (const auto& r : registry.records()) {
      options.language_names.emplace(r.iso639_3, r.canonical_name);
    }
  }
  return std::make_unique<ReviewService>(std::move(corpus.candidates), ws.ledger(), audit::load_probes(ws.probes()),
                                         std::move(options));
}

long ReviewService::revision() const {
  std::shared_lock lock(mu_);
  return store_.revision();
}

std::string ReviewService::now() const { return options_.clock ? options_.clock() : utc_now_iso8601(); }

std::string ReviewService::snapshot() const {
  std::shared_lock lock(mu_);
  return store_.snapshot();
}

json ReviewService::candidate_view(const CandidateMention& m) const {
  auto name = options_.language_names.find(m.language);
  json suggestions = json::array();
  for (const auto& s : suggest_merge_targets(store_, m)) {
    suggestions.push_back({{"dataset_id", s.dataset_id},
                           {"canonical_name", s.canonical_name},
                           {"score", s.score},
                           {"substring", s.substring}});
  }
  return {{"mention_id", m.mention_id},
          {"language", m.language},
          {"language_name", name == options_.language_names.end() ? json(nullptr) : json(name->second)},
          {"context", m.context.context_text},
          {"direction", std::string(to_string(m.context.direction))},
          {"citing", paper_to_json(m.context.citing)},
          {"cited", paper_to_json(m.context.cited)},
          {"extracted_name", opt_json(m.extracted_name)},
          {"verdict", m.verdict ? verdict_to_json(*m.verdict) : json(nullptr)},
          {"score", queue_score(m)},
          {"status", status_json(store_.status(m.mention_id))},
          {"suggestions", suggestions}};
}

json ReviewService::queue_next(const std::optional<std::string>& language) const {
  std::shared_lock lock(mu_);
  const CandidateMention* best = nullptr;
  long remaining = 0;
  auto before = [](const CandidateMention& a, const CandidateMention& b) {
    if (a.language != b.language) return a.language < b.language;
    double sa = queue_score(a), sb = queue_score(b);
    if (sa != sb) return sa > sb;
    return a.mention_id < b.mention_id;
  };
  for (const auto& [id, m] : store_.candidates()) {
    if (language && m.language != *language) continue;
    if (store_.status(id).state != State::Pending) continue;
    ++remaining;
    if (!best || before(m, *best)) best = &m;
  }
  return {{"candidate", best ? candidate_view(*best) : json(nullptr)},
          {"remaining", remaining},
          {"revision", store_.revision()}};
}

json ReviewService::candidate(std::string_view mention_id) const {
  std::shared_lock lock(mu_);
  const auto* m = store_.candidate(mention_id);
  if (!m) throw Error(ErrorCode::UnknownMention, "unknown mention " + std::string(mention_id));
  auto view = candidate_view(*m);
  view["revision"] = store_.revision();
  return view;
}

json ReviewService::stats() const {
  std::shared_lock lock(mu_);
  auto out = validation::pipeline_summary(store_).to_json();
  out["revision"] = store_.revision();
  try {
    out["precision_pct"] = validation::precision(store_);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::NoDecisions) throw;
    out["precision_pct"] = nullptr;
  }
  return out;
}

json ReviewService::datasets(const std::optional<std::string>& language) const {
  std::shared_lock lock(mu_);
  json items = json::array();
  for (const auto& r : validation::consolidate(store_)) {
    if (language && !r.languages.contains(*language)) continue;
    auto probes = probes_.find(r.dataset_id);
    items.push_back({{"dataset_id", r.dataset_id},
                     {"canonical_name", r.canonical_name},
                     {"languages", r.languages},
                     {"mentions", r.member_mention_ids.size()},
                     {"founder", r.founder},
                     {"probes", probes == probes_.end() ? 0 : probes->second.size()}});
  }
  return {{"datasets", items}, {"revision", store_.revision()}};
}

json ReviewService::dataset(std::string_view dataset_id) const {
  std::shared_lock lock(mu_);
  const auto* ds = store_.dataset(dataset_id);
  if (!ds) throw Error(ErrorCode::UnknownDataset, "unknown dataset " + std::string(dataset_id));
  std::vector<std::string> members{ds->founder};
  members.insert(members.end(), ds->merged.begin(), ds->merged.end());

  json probes = json::array();
  json derived = nullptr;
  if (auto it = probes_.find(dataset_id); it != probes_.end()) {
    for (const auto& p : it->second) probes.push_back(audit::probe_to_json(p));
    std::optional<bool> confirmation;
    if (auto n = store_.accessibility_notes().find(dataset_id); n != store_.accessibility_notes().end()) {
      confirmation = n->second.confirmation;
    }
    derived = std::string(audit::to_string(audit::classify_accessibility(ds->dataset_id, it->second, confirmation).status));
  }
  json note = nullptr;
  if (auto n = store_.accessibility_notes().find(dataset_id); n != store_.accessibility_notes().end()) {
    note = {{"status", std::string(audit::to_string(n->second.status))},
            {"confirmation", n->second.confirmation ? json(*n->second.confirmation) : json(nullptr)}};
  }
  json labels = nullptr;
  if (auto l = store_.labels().find(dataset_id); l != store_.labels().end()) {
    labels = {{"tasks", l->second.tasks}, {"modality", std::string(validation::to_string(l->second.modality))}};
  }
  return {{"dataset_id", ds->dataset_id},
          {"canonical_name", ds->canonical_name},
          {"language", ds->language},
          {"founder", ds->founder},
          {"members", members},
          {"labels", labels},
          {"accessibility_note", note},
          {"accessibility", derived},
          {"probes", probes},
          {"revision", store_.revision()}};
}

json ReviewService::commit(std::vector<validation::Payload> payloads, const json& body, const std::string& annotator,
                           bool revision_required) {
  std::unique_lock lock(mu_);
  auto rev = body.find("revision");
  if (rev == body.end() || rev->is_null()) {
    if (revision_required) throw Error(ErrorCode::PreconditionViolation, "revision is required");
  } else {
    if (!rev->is_number_integer()) throw Error(ErrorCode::PreconditionViolation, "revision must be an integer");
    if (rev->get<long>() != store_.revision()) {
      throw Error(ErrorCode::RevisionConflict, "revision " + std::to_string(rev->get<long>()) +
                                                   " is stale; current is " + std::to_string(store_.revision()));
    }
  }
  auto note = opt_string(body, "note");
  std::vector<validation::Event> events;
  for (auto& p : payloads) {
    validation::Event e;
    e.seq = store_.revision() + 1 + static_cast<long>(events.size());
    e.ts = now();
    e.annotator = annotator;
    e.note = note;
    e.payload = std::move(p);
    events.push_back(std::move(e));
  }

  if (events.size() == 1) {
    store_.check(events.front());
    ledger_.append(events.front());
    store_.apply(events.front());
  } else {
    auto scratch = store_;
    for (const auto& e : events) scratch.apply(e);
    try {
      for (const auto& e : events) ledger_.append(e);
    } catch (...) {
      // Partial append: rebuild from what actually reached the file.
      store_ = validation::replay(candidates_, ledger_.load());
      throw;
    }
    store_ = std::move(scratch);
  }
  json seqs = json::array();
  for (const auto& e : events) seqs.push_back(e.seq);
  return {{"accepted", seqs}, {"revision", store_.revision()}};
}

json ReviewService::decide(std::string_view mention_id, const json& body, const std::string& annotator) {
  if (!body.is_object()) throw Error(ErrorCode::PreconditionViolation, "decision body must be an object");
  auto state_name = opt_string(body, "state");
  if (!state_name) throw Error(ErrorCode::PreconditionViolation, "state is required");
  auto state = validation::state_from_string(*state_name);
  if (!state) throw Error(ErrorCode::PreconditionViolation, "unknown state " + *state_name);

  validation::StateChange change;
  change.mention = std::string(mention_id);
  change.state = *state;
  change.target = opt_string(body, "target");
  change.reason = opt_string(body, "reason");
  change.canonical_name = opt_string(body, "canonical_name");
  if (change.state == State::Confirmed && !change.canonical_name) {
    std::shared_lock lock(mu_);
    const auto* m = store_.candidate(mention_id);
    if (!m) throw Error(ErrorCode::UnknownMention, "unknown mention " + std::string(mention_id));
    change.canonical_name = m->extracted_name;
  }
  return commit({change}, body, annotator, true);
}

json ReviewService::merge(std::string_view dataset_id, const json& body, const std::string& annotator) {
  if (!body.is_object()) throw Error(ErrorCode::PreconditionViolation, "merge body must be an object");
  auto ids = body.find("mention_ids");
  if (ids == body.end()) ids = body.find("source_mention_ids");
  if (ids == body.end() || !ids->is_array() || ids->empty()) {
    throw Error(ErrorCode::PreconditionViolation, "mention_ids must be a non-empty array");
  }
  std::vector<validation::Payload> payloads;
  std::set<std::string> seen;
  for (const auto& id : *ids) {
    if (!id.is_string()) throw Error(ErrorCode::PreconditionViolation, "mention ids must be strings");
    if (!seen.insert(id.get<std::string>()).second) continue;
    validation::StateChange change;
    change.mention = id.get<std::string>();
    change.state = State::Merged;
    change.target = std::string(dataset_id);
    payloads.emplace_back(std::move(change));
  }
  return commit(std::move(payloads), body, annotator, false);
}

json ReviewService::accessibility(std::string_view dataset_id, const json& body, const std::string& annotator) {
  if (!body.is_object()) throw Error(ErrorCode::PreconditionViolation, "accessibility body must be an object");
  auto status_name = opt_string(body, "status");
  auto status = status_name ? audit::access_status_from_string(*status_name) : std::nullopt;
  if (!status) throw Error(ErrorCode::PreconditionViolation, "status must be OPEN or NOT_OPEN");
  std::optional<bool> confirmation;
  if (auto c = body.find("confirmation"); c != body.end() && !c->is_null()) {
    if (!c->is_boolean()) throw Error(ErrorCode::PreconditionViolation, "confirmation must be a boolean");
    confirmation = c->get<bool>();
  }
  {
    std::shared_lock lock(mu_);
    if (!store_.dataset(dataset_id)) throw Error(ErrorCode::UnknownDataset, "unknown dataset " + std::string(dataset_id));
    auto it = probes_.find(dataset_id);
    audit::check_annotation(it == probes_.end() ? std::vector<audit::UrlProbe>{} : it->second, *status, confirmation);
  }
  validation::AccessibilityNote note{std::string(dataset_id), *status, confirmation};
  return commit({note}, body, annotator, false);
}

json ReviewService::labels(std::string_view dataset_id, const json& body, const std::string& annotator) {
  if (!body.is_object()) throw Error(ErrorCode::PreconditionViolation, "labels body must be an object");
  validation::LabelAssignment l;
  l.dataset = std::string(dataset_id);
  auto tasks = body.find("tasks");
  if (tasks == body.end() || !tasks->is_array()) throw Error(ErrorCode::PreconditionViolation, "tasks must be an array");
  for (const auto& t : *tasks) {
    if (!t.is_string() || text::trim(t.get<std::string>()).empty()) {
      throw Error(ErrorCode::PreconditionViolation, "tasks must be non-empty strings");
    }
    l.tasks.push_back(t.get<std::string>());
  }
  auto modality = validation::modality_from_string(opt_string(body, "modality").value_or("TEXT"));
  if (!modality) throw Error(ErrorCode::PreconditionViolation, "unknown modality");
  l.modality = *modality;
  return commit({l}, body, annotator, false);
}

json ReviewService::emergence(std::string_view dataset_id, const json& body, const std::string& annotator) {
  if (!body.is_object()) throw Error(ErrorCode::PreconditionViolation, "emergence body must be an object");
  validation::EmergenceReview r;
  r.dataset = std::string(dataset_id);
  auto papers = body.find("plausible");
  if (papers == body.end() || !papers->is_array()) {
    throw Error(ErrorCode::PreconditionViolation, "plausible must be an array of paper ids");
  }
  for (const auto& p : *papers) {
    if (!p.is_string()) throw Error(ErrorCode::PreconditionViolation, "paper ids must be strings");
    r.plausible.push_back(p.get<std::string>());
  }
  return commit({r}, body, annotator, false);
}

int http_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::UnknownMention:
    case ErrorCode::UnknownDataset: return 404;
    case ErrorCode::RevisionConflict:
    case ErrorCode::SequenceConflict:
    case ErrorCode::SequenceGap: return 409;
    case ErrorCode::InvalidTransition:
    case ErrorCode::UnknownMergeTarget:
    case ErrorCode::InconsistentAccessibility:
    case ErrorCode::NoProbes: return 422;
    case ErrorCode::PreconditionViolation:
    case ErrorCode::MalformedRecord:
    case ErrorCode::ConfigError: return 400;
    case ErrorCode::Unauthorized: return 401;
    default: return 500;
  }
}

namespace {

void send_json(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, ErrorCode code, const std::string& message) {
  send_json(res, http_status(code), {{"code", std::string(to_string(code))}, {"message", message}});
}

template <class F>
void guarded(httplib::Response& res, F&& f) {
  try {
    send_json(res, 200, f());
  } catch (const Error& e) {
    send_error(res, e.code(), e.what());
  } catch (const json::exception& e) {
    send_error(res, ErrorCode::MalformedRecord, e.what());
  } catch (const std::exception& e) {
    log::error(std::string("review-api: ") + e.what());
    send_error(res, ErrorCode::IoError, e.what());
  }
}

json parse_body(const httplib::Request& req) {
  if (req.body.empty()) return json::object();
  try {
    return json::parse(req.body);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::MalformedRecord, std::string("request body is not JSON: ") + e.what());
  }
}

std::string annotator_of(const httplib::Request& req, const json& body) {
  if (auto it = body.find("annotator"); it != body.end() && it->is_string() && !it->get<std::string>().empty()) {
    return it->get<std::string>();
  }
  auto h = req.get_header_value("X-Annotator");
  return h.empty() ? "anonymous" : h;
}

std::optional<std::string> query(const httplib::Request& req, const char* key) {
  if (!req.has_param(key)) return std::nullopt;
  auto v = req.get_param_value(key);
  if (v.empty()) return std::nullopt;
  return v;
}

const char* kPlaceholder =
    "<!doctype html><html><head><title>rdiaudit review</title></head>"
    "<body><p>Review console bundle not installed. The JSON API is under /api/.</p></body></html>";

}  // namespace

ReviewServer::ReviewServer(std::shared_ptr<ReviewService> service, ServerOptions options)
    : service_(std::move(service)), options_(std::move(options)), server_(std::make_unique<httplib::Server>()) {
  // The library default sets SO_REUSEPORT, which would let a second server
  // share a busy port instead of failing to bind.
  server_->set_socket_options([](socket_t sock) {
    int yes = 1;
    ::setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof(yes));
  });
  install_routes();
}

ReviewServer::~ReviewServer() { stop(); }

void ReviewServer::install_routes() {
  auto& s = *server_;
  auto svc = service_;

  if (options_.token) {
    std::string expected = "Bearer " + *options_.token;
    s.set_pre_routing_handler([expected](const httplib::Request& req, httplib::Response& res) {
      if (req.path.rfind("/api/", 0) != 0) return httplib::Server::HandlerResponse::Unhandled;
      if (req.get_header_value("Authorization") == expected) return httplib::Server::HandlerResponse::Unhandled;
      send_error(res, ErrorCode::Unauthorized, "missing or wrong bearer token");
      return httplib::Server::HandlerResponse::Handled;
    });
  }

  s.Get("/api/queue/next", [svc](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] { return svc->queue_next(query(req, "language")); });
  });
  s.Get("/api/candidates/:id", [svc](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] { return svc->candidate(req.path_params.at("id")); });
  });
  s.Post("/api/candidates/:id/decision", [svc](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      auto body = parse_body(req);
      return svc->decide(req.path_params.at("id"), body, annotator_of(req, body));
    });
  });
  s.Get("/api/datasets", [svc](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] { return svc->datasets(query(req, "language")); });
  });
  s.Get("/api/datasets/:id", [svc](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] { return svc->dataset(req.path_params.at("id")); });
  });
  auto dataset_post = [&s, svc](const char* pattern,
                                json (ReviewService::*op)(std::string_view, const json&, const std::string&)) {
    s.Post(pattern, [svc, op](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] {
        auto body = parse_body(req);
        return ((*svc).*op)(req.path_params.at("id"), body, annotator_of(req, body));
      });
    });
  };
  dataset_post("/api/datasets/:id/merge", &ReviewService::merge);
  dataset_post("/api/datasets/:id/accessibility", &ReviewService::accessibility);
  dataset_post("/api/datasets/:id/labels", &ReviewService::labels);
  dataset_post("/api/datasets/:id/emergence", &ReviewService::emergence);
  s.Get("/api/stats", [svc](const httplib::Request&, httplib::Response& res) { guarded(res, [&] { return svc->stats(); }); });

  if (!options_.static_dir.empty() && fs::is_directory(options_.static_dir)) {
    s.set_mount_point("/", options_.static_dir.string());
  } else {
    s.Get("/", [](const httplib::Request&, httplib::Response& res) { res.set_content(kPlaceholder, "text/html"); });
  }
  s.set_error_handler([](const httplib::Request& req, httplib::Response& res) {
    if (req.path.rfind("/api/", 0) == 0 && res.body.empty()) {
      send_json(res, res.status, {{"code", "NotFound"}, {"message", "no route for " + req.method + " " + req.path}});
    }
  });
}

int ReviewServer::start() {
  if (thread_.joinable()) return port_;
  if (options_.port == 0) {
    port_ = server_->bind_to_any_port(options_.host);
    if (port_ <= 0) throw Error(ErrorCode::BindFailure, "cannot bind " + options_.host);
  } else {
    if (!server_->bind_to_port(options_.host, options_.port)) {
      throw Error(ErrorCode::BindFailure, "cannot bind " + options_.host + ":" + std::to_string(options_.port));
    }
    port_ = options_.port;
  }
  thread_ = std::thread([this] { server_->listen_after_bind(); });
  server_->wait_until_ready();
  return port_;
}

void ReviewServer::stop() {
  if (server_) server_->stop();
  if (thread_.joinable()) thread_.join();
}

}  // namespace rdiaudit::review
