#include "test_support.hpp"

#include <httplib.h>
#include <stdlib.h>

#include <regex>

#include "rdiaudit/pipeline.hpp"
#include "rdiaudit/util/csv.hpp"
#include "rdiaudit/util/files.hpp"
#include <stdexcept>

namespace rdiaudit::testing {

namespace fs = std::filesystem;
using nlohmann::json;

fs::path source_dir() { return RDIAUDIT_SOURCE_DIR; }

fs::path fixture(const std::string& relative) { return source_dir() / "fixtures" / relative; }

TempDir::TempDir() {
  auto tmpl = (fs::temp_directory_path() / "rdiaudit-test-XXXXXX").string();
  if (!::mkdtemp(tmpl.data())) throw std::runtime_error("mkdtemp failed");
  path_ = tmpl;
}

TempDir::~TempDir() {
  std::error_code ec;
  fs::remove_all(path_, ec);
}

std::vector<ComparisonFixtureRow> load_comparison_fixture() {
  auto rows = csv::parse(files::read_text(fixture("comparison_table.csv")));
  std::vector<ComparisonFixtureRow> out;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& f = rows[i].fields;
    if (f.size() != 11) throw std::runtime_error("comparison_table.csv: bad row");
    out.push_back({f[0], f[1], std::stod(f[2]), std::stol(f[3]), std::stol(f[5]), std::stol(f[7]), f[4], f[6], f[8], f[9],
                   f[10]});
  }
  return out;
}

rdi::RdiEntry comparison_fixture_entry(const ComparisonFixtureRow& row) {
  rdi::RdiEntry e;
  e.iso639_3 = row.iso639_3;
  e.name = row.name;
  e.population_millions = row.population_millions;
  e.per_source[rdi::Source::LreMap] = {row.lre, rdi::compute_rdi(row.lre, row.population_millions)};
  e.per_source[rdi::Source::Ldc] = {row.ldc, rdi::compute_rdi(row.ldc, row.population_millions)};
  e.avg_catalogue_rdi = rdi::average_catalogue_rdi(e);
  e.mined = rdi::SourceValue{row.mined, rdi::compute_rdi(row.mined, row.population_millions)};
  return e;
}

void prepare_demo_workspace(const fs::path& ws) {
  copy_tree(fixture("demo/workspace"), ws);
  cli::Config c;
  c.workspace = ws;
  c.replay = true;
  c.languages = {"tsn", "npi"};
  cli::Services svc;
  svc.clock = [] { return std::string("2025-05-01T12:00:00Z"); };
  for (auto s : {cli::Stage::Ingest, cli::Stage::Rdi, cli::Stage::Discover, cli::Stage::Classify}) {
    if (cli::run_stage(s, c, svc).exit_code != 0) throw std::runtime_error("demo stage failed");
  }
}

void copy_tree(const fs::path& from, const fs::path& to) {
  fs::create_directories(to);
  fs::copy(from, to, fs::copy_options::recursive | fs::copy_options::overwrite_existing);
}

http::Outcome ScriptedTransport::send(const http::Request& request) {
  {
    std::lock_guard lock(mu_);
    requests_.push_back(request);
  }
  return handler_(request);
}

std::vector<http::Request> ScriptedTransport::requests() const {
  std::lock_guard lock(mu_);
  return requests_;
}

long ScriptedTransport::count() const {
  std::lock_guard lock(mu_);
  return static_cast<long>(requests_.size());
}

http::Outcome respond(int status, std::string body, http::Headers headers) {
  http::Outcome o;
  http::Response r;
  r.status = status;
  r.body = std::move(body);
  r.headers = std::move(headers);
  o.response = std::move(r);
  return o;
}

http::Outcome fail(http::Failure f, std::string detail) {
  http::Outcome o;
  o.failure = f;
  o.detail = std::move(detail);
  return o;
}

// --- FixtureServer ------------------------------------------------------------

FixtureServer::FixtureServer() : server_(std::make_unique<httplib::Server>()) {}

FixtureServer::~FixtureServer() { stop(); }

std::string FixtureServer::url(const std::string& path) const {
  return "http://127.0.0.1:" + std::to_string(port_) + path;
}

void FixtureServer::start() {
  port_ = server_->bind_to_any_port("127.0.0.1");
  if (port_ <= 0) throw std::runtime_error("fixture server cannot bind");
  thread_ = std::thread([this] { server_->listen_after_bind(); });
  server_->wait_until_ready();
}

void FixtureServer::stop() {
  stopping_ = true;
  if (server_) server_->stop();
  if (thread_.joinable()) thread_.join();
}

// --- ScholarServer ------------------------------------------------------------

namespace {

int param_int(const httplib::Request& req, const char* key, int fallback) {
  if (!req.has_param(key)) return fallback;
  try {
    return std::stoi(req.get_param_value(key));
  } catch (...) {
    return fallback;
  }
}

json page_of(const json& items, int offset, int limit, int cap) {
  int n = static_cast<int>(items.size());
  int take = std::max(0, std::min({limit, cap, n - offset}));
  json data = json::array();
  for (int i = offset; i < offset + take; ++i) data.push_back(items[static_cast<std::size_t>(i)]);
  json page = {{"offset", offset}, {"data", data}};
  if (offset + take < n) page["next"] = offset + take;
  return page;
}

}  // namespace

ScholarServer::ScholarServer(json world, int page_cap) : world_(std::move(world)), page_cap_(page_cap) {
  auto gate = [this](httplib::Response& res) {
    ++requests_;
    std::lock_guard lock(mu_);
    if (fail_remaining_ <= 0) return false;
    --fail_remaining_;
    res.status = fail_status_;
    if (fail_retry_after_) res.set_header("Retry-After", std::to_string(*fail_retry_after_));
    res.set_content(R"({"message":"injected failure"})", "application/json");
    return true;
  };

  server().Get("/graph/v1/paper/search", [this, gate](const httplib::Request& req, httplib::Response& res) {
    if (gate(res)) return;
    auto q = req.get_param_value("query");
    std::string name;
    if (auto a = q.find('"'); a != std::string::npos) {
      auto b = q.find('"', a + 1);
      if (b != std::string::npos) name = q.substr(a + 1, b - a - 1);
    }
    {
      std::lock_guard lock(mu_);
      searched_.push_back(name);
    }
    json items = json::array();
    if (auto it = world_["search"].find(name); it != world_["search"].end()) {
      for (const auto& id : *it) items.push_back(world_["papers"][id.get<std::string>()]);
    }
    auto page = page_of(items, param_int(req, "offset", 0), param_int(req, "limit", 100), page_cap_);
    page["total"] = items.size();
    res.set_content(page.dump(), "application/json");
  });

  server().Get(R"(/graph/v1/paper/([^/]+)/(references|citations))",
               [this, gate](const httplib::Request& req, httplib::Response& res) {
                 if (gate(res)) return;
                 std::string id = req.matches[1];
                 std::string edge = req.matches[2];
                 auto edges = world_[edge].find(id);
                 if (edges == world_[edge].end()) {
                   res.status = 404;
                   res.set_content(R"({"error":"Paper not found"})", "application/json");
                   return;
                 }
                 const char* other = edge == "references" ? "citedPaper" : "citingPaper";
                 json items = json::array();
                 for (const auto& link : *edges) {
                   items.push_back({{"contexts", link["contexts"]},
                                    {other, world_["papers"][link["paperId"].get<std::string>()]}});
                 }
                 auto page = page_of(items, param_int(req, "offset", 0), param_int(req, "limit", 100), page_cap_);
                 res.set_content(page.dump(), "application/json");
               });
  start();
}

ScholarServer::~ScholarServer() { stop(); }

void ScholarServer::fail_next(int n, int status, std::optional<int> retry_after_s) {
  std::lock_guard lock(mu_);
  fail_remaining_ = n;
  fail_status_ = status;
  fail_retry_after_ = retry_after_s;
}

std::vector<std::string> ScholarServer::searched_names() const {
  std::lock_guard lock(mu_);
  return searched_;
}

// --- LinkServer ---------------------------------------------------------------

struct LinkServer::InFlight {
  LinkServer& s;
  std::string host;
  InFlight(LinkServer& server, std::string h) : s(server), host(std::move(h)) {
    ++s.requests_;
    std::lock_guard lock(s.mu_);
    int n = ++s.in_flight_[host];
    s.max_[host] = std::max(s.max_[host], n);
  }
  ~InFlight() {
    std::lock_guard lock(s.mu_);
    --s.in_flight_[host];
  }
};

LinkServer::LinkServer(std::chrono::milliseconds slow_delay) : slow_delay_(slow_delay) {
  auto& s = server();
  auto host = [](const httplib::Request& req) { return req.get_header_value("Host"); };
  const std::string zip = std::string("PK\x03\x04", 4) + std::string(256, 'x');

  s.Get("/file.zip", [this, host, zip](const httplib::Request& req, httplib::Response& res) {
    InFlight f(*this, host(req));
    res.set_content(zip, "application/zip");
  });
  s.Get("/redirect", [this, host](const httplib::Request& req, httplib::Response& res) {
    InFlight f(*this, host(req));
    res.status = 302;
    res.set_header("Location", "/hop");
  });
  s.Get("/hop", [this, host](const httplib::Request& req, httplib::Response& res) {
    InFlight f(*this, host(req));
    res.status = 301;
    res.set_header("Location", "/file.zip");
  });
  s.Get("/missing", [this, host](const httplib::Request& req, httplib::Response& res) {
    InFlight f(*this, host(req));
    res.status = 404;
    res.set_content("<html><body>Not Found</body></html>", "text/html");
  });
  s.Get("/slow", [this, host](const httplib::Request& req, httplib::Response& res) {
    InFlight f(*this, host(req));
    auto until = std::chrono::steady_clock::now() + slow_delay_;
    while (std::chrono::steady_clock::now() < until && !stopping_) {
      std::this_thread::sleep_for(std::chrono::milliseconds(20));
    }
    res.set_content("late", "text/plain");
  });
  s.Get("/gated", [this, host](const httplib::Request& req, httplib::Response& res) {
    InFlight f(*this, host(req));
    res.set_content(
        "<!doctype html><html><body><form action=\"/login\" method=\"post\">"
        "<input name=\"user\"><input type=\"password\" name=\"pw\"></form></body></html>",
        "text/html; charset=utf-8");
  });
  s.Get("/page", [this, host](const httplib::Request& req, httplib::Response& res) {
    InFlight f(*this, host(req));
    res.set_content(
        "<!doctype html><html><body><h1>Corpus</h1><p>Contact the maintainers to request access.</p>"
        "</body></html>",
        "text/html");
  });
  s.Get(R"(/burst/(\d+))", [this, host, zip](const httplib::Request& req, httplib::Response& res) {
    InFlight f(*this, host(req));
    std::this_thread::sleep_for(std::chrono::milliseconds(100));
    res.set_content(zip, "application/zip");
  });
  start();
}

LinkServer::~LinkServer() { stop(); }

int LinkServer::max_in_flight(const std::string& host_header) const {
  std::lock_guard lock(mu_);
  auto it = max_.find(host_header);
  return it == max_.end() ? 0 : it->second;
}

int LinkServer::max_in_flight_any() const {
  std::lock_guard lock(mu_);
  int m = 0;
  for (const auto& [_, n] : max_) m = std::max(m, n);
  return m;
}

// --- FakeLlmServer ------------------------------------------------------------

FakeLlmServer::FakeLlmServer(Responder responder) : responder_(std::move(responder)) {
  server().Post("/v1/chat/completions", [this](const httplib::Request& req, httplib::Response& res) {
    ++calls_;
    int status;
    std::chrono::milliseconds delay;
    {
      std::lock_guard lock(mu_);
      status = status_;
      delay = delay_;
    }
    auto until = std::chrono::steady_clock::now() + delay;
    while (std::chrono::steady_clock::now() < until && !stopping_) {
      std::this_thread::sleep_for(std::chrono::milliseconds(10));
    }
    json body;
    try {
      body = json::parse(req.body);
    } catch (const json::exception&) {
      res.status = 400;
      return;
    }
    {
      std::lock_guard lock(mu_);
      last_ = body;
    }
    if (status != 200) {
      res.status = status;
      res.set_content(R"({"error":"injected"})", "application/json");
      return;
    }
    std::string prompt = body["messages"][0]["content"].get<std::string>();
    json reply = {{"id", "cmpl-fixture"},
                  {"object", "chat.completion"},
                  {"model", body.value("model", "")},
                  {"choices", json::array({{{"index", 0},
                                            {"message", {{"role", "assistant"}, {"content", responder_(prompt)}}},
                                            {"finish_reason", "stop"}}})}};
    res.set_content(reply.dump(), "application/json");
  });
  start();
}

FakeLlmServer::~FakeLlmServer() { stop(); }

void FakeLlmServer::set_status(int status) {
  std::lock_guard lock(mu_);
  status_ = status;
}

void FakeLlmServer::set_delay(std::chrono::milliseconds d) {
  std::lock_guard lock(mu_);
  delay_ = d;
}

json FakeLlmServer::last_request() const {
  std::lock_guard lock(mu_);
  return last_;
}

}  // namespace rdiaudit::testing
