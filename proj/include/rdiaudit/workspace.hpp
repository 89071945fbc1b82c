#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "rdiaudit/mention.hpp"

namespace rdiaudit::cli {

enum class Stage { Ingest, Rdi, Discover, Classify, Serve, AuditLinks, Report, Status };

std::string_view to_string(Stage s);
std::optional<Stage> stage_from_string(std::string_view s);

/// Fixed on-disk layout under one root directory.
///
///   inputs/languages.csv inputs/rules.tsv inputs/lre_map.csv inputs/ldc.csv
///   cache/api/          scholar responses
///   cache/llm.jsonl     classifier verdict cache
///   cache/candidates.jsonl cache/papers.jsonl cache/verdicts.jsonl
///   ledger/decisions.log ledger/probes.jsonl
///   reports/            stage outputs
///   .stages/<stage>.json completion markers
///   rdiaudit.json       optional config file
class Workspace {
 public:
  explicit Workspace(std::filesystem::path root);

  const std::filesystem::path& root() const { return root_; }
  std::filesystem::path inputs() const { return root_ / "inputs"; }
  std::filesystem::path languages_csv() const { return inputs() / "languages.csv"; }
  std::filesystem::path rules_tsv() const { return inputs() / "rules.tsv"; }
  std::filesystem::path lre_csv() const { return inputs() / "lre_map.csv"; }
  std::filesystem::path ldc_csv() const { return inputs() / "ldc.csv"; }
  std::filesystem::path cache() const { return root_ / "cache"; }
  std::filesystem::path api_cache() const { return cache() / "api"; }
  std::filesystem::path llm_cache() const { return cache() / "llm.jsonl"; }
  std::filesystem::path candidates() const { return cache() / "candidates.jsonl"; }
  std::filesystem::path papers() const { return cache() / "papers.jsonl"; }
  std::filesystem::path verdicts() const { return cache() / "verdicts.jsonl"; }
  std::filesystem::path ledger() const { return root_ / "ledger" / "decisions.log"; }
  std::filesystem::path probes() const { return root_ / "ledger" / "probes.jsonl"; }
  std::filesystem::path reports() const { return root_ / "reports"; }
  std::filesystem::path stages() const { return root_ / ".stages"; }
  std::filesystem::path marker(Stage s) const;
  std::filesystem::path config_file() const { return root_ / "rdiaudit.json"; }
  std::filesystem::path lock_file() const { return root_ / ".lock"; }

  std::optional<nlohmann::json> read_marker(Stage s) const;
  void write_marker(Stage s, const nlohmann::json& marker) const;
  void clear_marker(Stage s) const;

 private:
  std::filesystem::path root_;
};

/// SHA-256 over each file's name and bytes; missing files contribute their
/// name and a sentinel so that appearing or vanishing changes the digest.
std::string digest_files(const std::vector<std::filesystem::path>& files);

/// Fully resolved settings for one invocation.
struct Config {
  std::filesystem::path workspace = ".";
  bool replay = false;
  double threshold = 0.1;
  int k = 400;
  std::set<std::string> types;           // catalogue resource types; empty keeps all
  std::vector<std::string> languages;    // discovery targets; empty means the low-visibility set
  std::string scholar_url = "https://api.semanticscholar.org";
  std::optional<std::string> scholar_api_key;
  double scholar_rps = 1.0;
  std::string llm_endpoint;              // empty selects the heuristic classifier
  std::string llm_model = "Qwen2.5-72B";
  std::optional<std::string> llm_api_key;
  bool llm_fallback = true;
  std::string host = "127.0.0.1";
  int port = 8080;
  std::optional<std::string> token;
  std::filesystem::path static_dir;      // review console bundle; empty disables
  int workers = 4;
  int probe_timeout_s = 30;
  int max_in_flight = 8;
  int per_host = 2;
  std::string annotator = "cli";
  bool force = false;                    // re-run a stage even when its marker is current
};

/// One source of settings. Unset fields leave lower layers alone.
using ConfigLayer = nlohmann::json;

using EnvLookup = std::function<std::optional<std::string>(const std::string&)>;
EnvLookup process_env();

/// RDIAUDIT_* variables as a layer: RDIAUDIT_REPLAY, RDIAUDIT_THRESHOLD,
/// RDIAUDIT_K, RDIAUDIT_TYPES, RDIAUDIT_LANGUAGES, RDIAUDIT_SCHOLAR_URL,
/// RDIAUDIT_SCHOLAR_API_KEY, RDIAUDIT_SCHOLAR_RPS, RDIAUDIT_LLM_ENDPOINT,
/// RDIAUDIT_LLM_MODEL, RDIAUDIT_LLM_API_KEY, RDIAUDIT_LLM_FALLBACK,
/// RDIAUDIT_HOST, RDIAUDIT_PORT, RDIAUDIT_TOKEN, RDIAUDIT_STATIC_DIR,
/// RDIAUDIT_WORKERS, RDIAUDIT_ANNOTATOR.
ConfigLayer env_layer(const EnvLookup& env);

/// Workspace config file, or an empty layer when absent. Throws ConfigError
/// for invalid JSON.
ConfigLayer file_layer(const std::filesystem::path& path);

/// flags > env > file > defaults. Keys use the Config field names. Throws
/// ConfigError for unknown keys or ill-typed values.
Config resolve_config(const std::filesystem::path& workspace, const ConfigLayer& flags, const ConfigLayer& env,
                      const ConfigLayer& file);

/// Convenience: reads env and the workspace's config file.
Config load_config(const std::filesystem::path& workspace, const ConfigLayer& flags, const EnvLookup& env = process_env());

/// Workspace artifacts loaded together.
struct Corpus {
  std::vector<CandidateMention> candidates;
  PaperIndex papers;
};

/// Reads candidates.jsonl and papers.jsonl, attaching verdicts.jsonl when
/// present. Throws MissingPrerequisite when candidates.jsonl is absent.
Corpus load_corpus(const Workspace& ws);

}  // namespace rdiaudit::cli
