#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include <json.hpp>

#include "rdiaudit/audit_types.hpp"
#include "rdiaudit/error.hpp"
#include "rdiaudit/ledger.hpp"
#include "rdiaudit/mention.hpp"
#include "rdiaudit/validation.hpp"
#include "rdiaudit/workspace.hpp"

namespace httplib {
class Server;
}

namespace rdiaudit::review {

using nlohmann::json;

struct ServiceOptions {
  std::function<std::string()> clock;  // event timestamps; UTC now when unset
  std::map<std::string, std::string, std::less<>> language_names;
};

/// A live dataset that a mention might be merged into.
struct MergeSuggestion {
  std::string dataset_id;
  std::string canonical_name;
  double score = 0.0;    // 1.0 for substring matches, token overlap otherwise
  bool substring = false;
};

/// Datasets whose canonical name relates to the mention's extracted name (or
/// its context when no name was extracted). Substring matches come first,
/// then by descending token overlap; ties by dataset id. Suggestions only.
std::vector<MergeSuggestion> suggest_merge_targets(const validation::Store& store, const CandidateMention& mention,
                                                   std::size_t limit = 5);

/// Request handling over one in-memory store and the single ledger appender.
/// Reads take a shared lock; writes are serialized and go check -> durable
/// append -> apply, so a rejected write never touches the ledger file.
class ReviewService {
 public:
  ReviewService(std::vector<CandidateMention> candidates, std::filesystem::path ledger_path,
                std::vector<audit::UrlProbe> probes = {}, ServiceOptions options = {});

  /// Loads candidates, papers, verdicts, the ledger, probes and language
  /// names from a workspace. Throws MissingPrerequisite without a ledger.
  static std::unique_ptr<ReviewService> open(const cli::Workspace& ws, ServiceOptions options = {});

  long revision() const;

  json queue_next(const std::optional<std::string>& language = std::nullopt) const;
  json candidate(std::string_view mention_id) const;
  json stats() const;
  json datasets(const std::optional<std::string>& language = std::nullopt) const;
  json dataset(std::string_view dataset_id) const;

  /// {state, revision, note?, canonical_name?, target?, reason?}. Throws
  /// RevisionConflict when `revision` is not the current one.
  json decide(std::string_view mention_id, const json& body, const std::string& annotator);
  /// {mention_ids, revision?}: one MERGED event per mention, all or nothing.
  json merge(std::string_view dataset_id, const json& body, const std::string& annotator);
  /// {status, confirmation?, note?, revision?}; checked against the probes.
  json accessibility(std::string_view dataset_id, const json& body, const std::string& annotator);
  /// {tasks, modality, note?, revision?}.
  json labels(std::string_view dataset_id, const json& body, const std::string& annotator);
  /// {plausible, note?, revision?}.
  json emergence(std::string_view dataset_id, const json& body, const std::string& annotator);

  /// Snapshot of the derived state, for tests and diagnostics.
  std::string snapshot() const;

 private:
  json commit(std::vector<validation::Payload> payloads, const json& body, const std::string& annotator,
              bool revision_required);
  json candidate_view(const CandidateMention& m) const;
  std::string now() const;

  mutable std::shared_mutex mu_;
  validation::Store store_;
  validation::LedgerFile ledger_;
  std::vector<CandidateMention> candidates_;  // for reloading after a failed append
  std::map<std::string, std::vector<audit::UrlProbe>, std::less<>> probes_;
  ServiceOptions options_;
};

/// HTTP status for a library error code.
int http_status(ErrorCode code);

struct ServerOptions {
  std::string host = "127.0.0.1";
  int port = 8080;  // 0 picks a free port
  std::optional<std::string> token;
  std::filesystem::path static_dir;
};

/// JSON API plus static console hosting at `/`.
///
///   GET  /api/queue/next[?language=]
///   GET  /api/candidates/{id}
///   POST /api/candidates/{id}/decision
///   GET  /api/datasets[?language=]
///   GET  /api/datasets/{id}
///   POST /api/datasets/{id}/merge
///   POST /api/datasets/{id}/accessibility
///   POST /api/datasets/{id}/labels
///   POST /api/datasets/{id}/emergence
///   GET  /api/stats
///
/// Errors are {code, message}.
class ReviewServer {
 public:
  ReviewServer(std::shared_ptr<ReviewService> service, ServerOptions options);
  ~ReviewServer();
  ReviewServer(const ReviewServer&) = delete;
  ReviewServer& operator=(const ReviewServer&) = delete;

  /// Binds and serves on a background thread; returns the bound port.
  /// Throws BindFailure.
  int start();
  void stop();
  int port() const { return port_; }

 private:
  void install_routes();

  std::shared_ptr<ReviewService> service_;
  ServerOptions options_;
  std::unique_ptr<httplib::Server> server_;
  std::thread thread_;
  int port_ = 0;
};

}  // namespace rdiaudit::review
