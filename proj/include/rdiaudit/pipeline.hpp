#pragma once

#include <functional>
#include <memory>
#include <string>

#include <json.hpp>

#include "rdiaudit/http/http_client.hpp"
#include "rdiaudit/scholar_client.hpp"
#include "rdiaudit/workspace.hpp"

namespace rdiaudit::cli {

/// External collaborators. Null members fall back to real network clients,
/// the real sleeper and the wall clock.
struct Services {
  std::shared_ptr<http::Transport> scholar;
  std::shared_ptr<http::Transport> llm;
  std::shared_ptr<http::Transport> probe;
  discovery::Sleeper sleeper;
  std::function<std::string()> clock;
};

struct StageResult {
  Stage stage = Stage::Status;
  int exit_code = 0;
  bool skipped = false;  // marker was current; nothing rewritten
  std::string summary;
  nlohmann::json details = nlohmann::json::object();
};

/// Runs one stage under the workspace lock (status takes no lock).
/// Hard failures throw: MissingPrerequisite, ConfigError, LedgerLocked and
/// whatever the stage's modules raise. Partial failures (a language that
/// could not be discovered, a mention that could not be classified) are
/// reported through a nonzero exit_code after the successful part is saved.
/// Serve is not handled here; the CLI runs review::ReviewServer itself.
StageResult run_stage(Stage stage, const Config& config, const Services& services = {});

/// Stage markers, ledger revision and, when available, the pipeline summary.
nlohmann::json workspace_status(const Workspace& ws);

/// Deterministic identifier of the workspace inputs a report is built from.
std::string snapshot_id(const Workspace& ws);

}  // namespace rdiaudit::cli
