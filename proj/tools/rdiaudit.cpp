#include <pthread.h>
#include <signal.h>

#include <CLI11.hpp>
#include <iostream>

#include "rdiaudit/error.hpp"
#include "rdiaudit/pipeline.hpp"
#include "rdiaudit/review_server.hpp"
#include "rdiaudit/util/files.hpp"
#include "rdiaudit/util/log.hpp"

using namespace rdiaudit;
using nlohmann::json;

namespace {

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::ConfigError: return 2;
    case ErrorCode::MissingPrerequisite: return 3;
    case ErrorCode::LedgerLocked: return 4;
    case ErrorCode::BindFailure: return 5;
    default: return 1;
  }
}

int serve(const cli::Config& config) {
  cli::Workspace ws(config.workspace);
  files::FileLock lock(ws.lock_file());
  std::shared_ptr<review::ReviewService> service = review::ReviewService::open(ws);

  // Handle SIGINT/SIGTERM synchronously: block them before the server
  // spawns threads, then wait for one on this thread.
  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  review::ServerOptions opts;
  opts.host = config.host;
  opts.port = config.port;
  opts.token = config.token;
  opts.static_dir = config.static_dir;
  review::ReviewServer server(service, opts);
  int port = server.start();
  std::cout << "serving " << ws.root().string() << " on http://" << opts.host << ":" << port << "/ (revision "
            << service->revision() << ")" << std::endl;
  int sig = 0;
  sigwait(&signals, &sig);
  log::info("shutting down");
  server.stop();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Resource visibility audit: catalogue ingest, RDI, discovery, review and reporting"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string workspace = ".";
  bool replay = false, force = false, verbose = false;
  double threshold = 0.1;
  int k = 400, port = 8080, workers = 4;
  std::vector<std::string> types, languages;
  std::string host, token, static_dir;

  app.add_option("-w,--workspace", workspace, "Workspace root")->capture_default_str();
  auto* o_replay = app.add_flag("--replay", replay, "Serve discovery and classification from cache only");
  auto* o_force = app.add_flag("--force", force, "Re-run the stage even if its marker is current");
  app.add_flag("-v,--verbose", verbose, "Debug logging");
  auto* o_threshold = app.add_option("--threshold", threshold, "Low-visibility RDI threshold");
  auto* o_workers = app.add_option("--workers", workers, "Worker threads");

  auto* ingest = app.add_subcommand("ingest", "Parse catalogues and count resources per language");
  auto* o_types = ingest->add_option("--types", types, "Resource types to keep")->delimiter(',');
  app.add_subcommand("rdi", "Compute RDI per language and the low-visibility set");
  auto* discover = app.add_subcommand("discover", "Query the scholarly graph for candidate mentions");
  auto* o_k = discover->add_option("--k", k, "Papers per language query");
  auto* o_langs = discover->add_option("--languages", languages, "ISO 639-3 codes (default: low-visibility set)")
                      ->delimiter(',');
  app.add_subcommand("classify", "Classify candidate mentions");
  auto* serve_cmd = app.add_subcommand("serve", "Run the review API and console");
  auto* o_host = serve_cmd->add_option("--host", host, "Bind address");
  auto* o_port = serve_cmd->add_option("--port", port, "Port (0 picks one)");
  auto* o_token = serve_cmd->add_option("--token", token, "Shared bearer token");
  auto* o_static = serve_cmd->add_option("--static-dir", static_dir, "Console bundle directory");
  app.add_subcommand("audit-links", "Probe dataset URLs");
  auto* report_cmd = app.add_subcommand("report", "Write comparison, trends, flows and histogram reports");
  auto* o_rtypes = report_cmd->add_option("--types", types, "Resource types to keep")->delimiter(',');
  app.add_subcommand("status", "Show stage markers and validation progress");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }
  if (verbose) log::set_min_level(log::Level::Debug);

  json flags = json::object();
  if (o_replay->count()) flags["replay"] = replay;
  if (o_force->count()) flags["force"] = force;
  if (o_threshold->count()) flags["threshold"] = threshold;
  if (o_workers->count()) flags["workers"] = workers;
  if (o_types->count() || o_rtypes->count()) flags["types"] = types;
  if (o_k->count()) flags["k"] = k;
  if (o_langs->count()) flags["languages"] = languages;
  if (o_host->count()) flags["host"] = host;
  if (o_port->count()) flags["port"] = port;
  if (o_token->count()) flags["token"] = token;
  if (o_static->count()) flags["static_dir"] = static_dir;

  auto name = app.get_subcommands().front()->get_name();
  try {
    auto config = cli::load_config(workspace, flags);
    auto stage = cli::stage_from_string(name);
    if (!stage) throw Error(ErrorCode::ConfigError, "unknown stage " + name);
    if (*stage == cli::Stage::Serve) return serve(config);
    auto result = cli::run_stage(*stage, config);
    if (*stage == cli::Stage::Status) {
      std::cout << result.details.dump(2) << std::endl;
    } else {
      std::cout << result.summary << std::endl;
    }
    return result.exit_code;
  } catch (const Error& e) {
    std::cerr << "rdiaudit " << name << ": " << to_string(e.code()) << ": " << e.what() << std::endl;
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "rdiaudit " << name << ": " << e.what() << std::endl;
    return 1;
  }
}
