#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <json.hpp>

#include "rdiaudit/audit_types.hpp"

namespace rdiaudit::validation {

enum class State { Pending, Confirmed, Unconfirmable, NonDataset, Merged };

std::string_view to_string(State s);
std::optional<State> state_from_string(std::string_view s);

/// Exclusion reason marking translations and reslicings of an existing
/// dataset. Such mentions are NON_DATASET in the state machine but count as
/// genuine mentions that were consolidated away.
inline constexpr std::string_view kNonDistinct = "NON_DISTINCT";

enum class Modality { Text, Speech, Multimodal };

std::string_view to_string(Modality m);
std::optional<Modality> modality_from_string(std::string_view s);

struct StateChange {
  std::string mention;
  State state = State::Pending;
  std::optional<std::string> target;          // dataset id, MERGED only
  std::optional<std::string> reason;          // e.g. NON_DISTINCT
  std::optional<std::string> canonical_name;  // CONFIRMED only
  bool operator==(const StateChange&) const = default;
};

struct AccessibilityNote {
  std::string dataset;
  audit::AccessStatus status = audit::AccessStatus::NotOpen;
  std::optional<bool> confirmation;
  bool operator==(const AccessibilityNote&) const = default;
};

struct LabelAssignment {
  std::string dataset;
  std::vector<std::string> tasks;
  Modality modality = Modality::Text;
  bool operator==(const LabelAssignment&) const = default;
};

/// Annotator judgment of which papers plausibly introduced a dataset.
struct EmergenceReview {
  std::string dataset;
  std::vector<std::string> plausible;
  bool operator==(const EmergenceReview&) const = default;
};

using Payload = std::variant<StateChange, AccessibilityNote, LabelAssignment, EmergenceReview>;

/// One ledger line.
struct Event {
  long seq = 0;
  std::string ts;
  std::string annotator;
  std::optional<std::string> note;
  Payload payload;

  bool operator==(const Event&) const = default;

  /// Sorted-key JSON object; `kind` is state|accessibility|labels|emergence.
  nlohmann::json to_json() const;
  /// Throws MalformedRecord.
  static Event from_json(const nlohmann::json& j);
  std::string line() const { return to_json().dump(); }
};

/// Parses newline-delimited events. A final line without a terminating
/// newline that fails to parse is treated as a torn write and dropped;
/// any other bad line throws MalformedRecord.
std::vector<Event> parse_ledger(std::string_view text);

/// Append-only ledger file; each append is fsynced before returning.
class LedgerFile {
 public:
  explicit LedgerFile(std::filesystem::path path);

  std::vector<Event> load() const;  // empty when the file does not exist
  void append(const Event& e) const;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace rdiaudit::validation
