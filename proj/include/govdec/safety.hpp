#pragma once

#include <atomic>
#include <cstddef>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "govdec/config.hpp"
#include "govdec/hitl.hpp"

namespace govdec {

struct GuardrailFinding {
  std::string pattern_id;
  GuardrailCategory category = GuardrailCategory::PromptInjection;
  Severity severity = Severity::Warning;
  /// Dotted path of the scanned field; empty for bare text.
  std::string field;
  /// Byte offsets into the field value, end exclusive.
  std::size_t begin = 0;
  std::size_t end = 0;
  std::string matched;

  json to_json() const;
};

/// Case-insensitive pass of every pattern over one text.
std::vector<GuardrailFinding> scan_text(const std::string& text, const std::vector<GuardrailPattern>& patterns,
                                        const std::string& field = {});

/// Scans every string value in the case, ground-truth block excluded.
std::vector<GuardrailFinding> scan(const json& case_fields, const std::vector<GuardrailPattern>& patterns);

/// Token to original value, scoped to one instance.
class RedactionMap {
 public:
  struct Entry {
    std::string token;
    std::string category;
    std::string original;
  };

  std::string scope;

  /// Stable token for (category, original), minted on first use.
  const std::string& token_for(const std::string& category, const std::string& original);
  const std::string* original(const std::string& token) const;
  const std::vector<Entry>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }

  json to_json() const;
  static RedactionMap from_json(const json& j);

 private:
  std::vector<Entry> entries_;
  std::map<std::string, int> counters_;
};

/// "⟨PII:category:n⟩"
std::string pii_token(const std::string& category, int n);

struct Redaction {
  std::string text;
  RedactionMap map;
};

/// Replaces policy matches with tokens. Existing tokens are left alone, so
/// redaction is idempotent.
Redaction redact(const std::string& text, const PiiPolicy& policy);

/// As above, extending `map`. `literals` (category -> values) are redacted
/// verbatim before the regex patterns run.
std::string redact_into(const std::string& text, const PiiPolicy& policy, RedactionMap& map,
                        const std::multimap<std::string, std::string>& literals = {});

/// Redacts every string in a case. Values at the policy's field paths are
/// redacted wherever they recur.
json redact_case(const json& case_view, const PiiPolicy& policy, RedactionMap& map);

/// Restores originals. Throws UnauthorizedActor unless the actor is a reviewer.
std::string deredact(const std::string& text, const RedactionMap& map, const Actor& actor);

enum class KillScope : std::uint8_t { Global, Domain, Instance };
std::string_view to_string(KillScope s) noexcept;
std::optional<KillScope> parse_kill_scope(std::string_view s) noexcept;

struct KillSwitch {
  KillScope scope = KillScope::Global;
  /// Domain or instance id; empty for global.
  std::string target;
  bool engaged = false;
  std::string reason;

  json to_json() const;
};

struct KillCheck {
  bool halted = false;
  std::optional<KillSwitch> by;
};

/// Process-wide switch board consulted before every dispatch.
class KillSwitchBoard {
 public:
  void engage(KillScope scope, const std::string& target, const std::string& reason);
  void release(KillScope scope, const std::string& target);
  /// Checks global, then domain, then instance.
  KillCheck check(const std::string& domain_id, const std::string& instance_id) const;
  std::vector<KillSwitch> engaged() const;

 private:
  mutable std::mutex mu_;
  std::map<std::pair<KillScope, std::string>, KillSwitch> switches_;
  std::atomic<int> engaged_count_{0};
};

}  // namespace govdec
