#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace govdec {

using json = nlohmann::json;

/// Canonical serialization: sorted keys, no whitespace, ASCII-only output with
/// lowercase \uXXXX escapes, integers only. Throws SerializationError for
/// floats, nulls and invalid UTF-8.
std::string canonical_json(const json& value);

/// Maps an arbitrary JSON value into the canonical domain: floats become
/// six-decimal strings, nulls inside objects are dropped and nulls inside
/// arrays become the string "null".
json to_canonical_value(const json& value);

std::string sha256_hex(std::string_view data);

inline constexpr std::string_view kGenesisConstant = "cognitive-core-genesis-v1";
inline constexpr std::string_view kLegacyZeroSeed =
    "0000000000000000000000000000000000000000000000000000000000000000";

/// SHA256 of the genesis constant; prior hash of entry 0.
const std::string& chain_seed();

enum class EntryType : std::uint8_t {
  StepCompleted,
  OrchestratorDecision,
  GovernanceAction,
  HitlTransition,
  GuardrailEvent,
  WorkOrder,
  System,
};

std::string_view to_string(EntryType t) noexcept;
std::optional<EntryType> parse_entry_type(std::string_view s) noexcept;

struct LedgerEntry {
  std::uint64_t index = 0;
  EntryType entry_type = EntryType::System;
  json content = json::object();
  std::string prior_hash;
  std::string hash;

  /// One NDJSON line (without the trailing newline).
  std::string to_line() const;
  static LedgerEntry from_line(std::string_view line);
};

/// hash = SHA256(prior_hash_hex ++ canonical_json(content))
std::string entry_hash(std::string_view prior_hash_hex, const json& content);

struct ChainVerification {
  bool chain_valid = true;
  std::optional<std::uint64_t> first_broken_index;
  std::uint64_t entries_checked = 0;

  json to_json() const;
};

struct VerifyOptions {
  /// Accept an all-zeros prior hash on entry 0 (older chains).
  bool accept_legacy_zero_seed = false;
};

ChainVerification verify_chain(const std::vector<LedgerEntry>& entries,
                               const VerifyOptions& options = {});

/// Verifies an NDJSON ledger file. Lines that do not parse count as broken.
ChainVerification verify_ledger_file(const std::filesystem::path& path,
                                     const VerifyOptions& options = {});

/// Append-only hash-chained ledger. In-memory by default; when opened on a
/// file every append is written and fsync'd before the call returns.
class Ledger {
 public:
  /// Produces the timestamp for the entry about to receive `index`.
  using Clock = std::function<std::string(std::uint64_t index)>;
  using AppendHook = std::function<void(const LedgerEntry&)>;

  Ledger();
  ~Ledger();
  Ledger(const Ledger&) = delete;
  Ledger& operator=(const Ledger&) = delete;

  /// Opens (or creates) a file-backed ledger. A torn final line left by a
  /// crash mid-write is truncated away.
  static std::unique_ptr<Ledger> open(const std::filesystem::path& path);

  /// Hashes `content` exactly as given.
  LedgerEntry append_raw(EntryType type, json content);

  /// Adds "index", "entry_type" and (when absent) "timestamp" to the content
  /// before hashing, so all three are covered by the chain.
  LedgerEntry append(EntryType type, json content);

  void set_clock(Clock clock);
  /// Called after each durable append; used by crash tests to kill the
  /// process at an exact point.
  void set_append_hook(AppendHook hook);

  std::vector<LedgerEntry> snapshot() const;
  std::size_t size() const;
  std::string head_hash() const;
  ChainVerification verify(const VerifyOptions& options = {}) const;
  const std::optional<std::filesystem::path>& path() const noexcept { return path_; }

 private:
  LedgerEntry append_impl(EntryType type, json content, bool stamp);

  mutable std::shared_mutex mutex_;
  std::vector<LedgerEntry> entries_;
  std::optional<std::filesystem::path> path_;
  int fd_ = -1;
  Clock clock_;
  AppendHook hook_;
};

/// ISO-8601 UTC with second precision, e.g. 2026-01-01T00:00:00Z.
std::string iso8601_utc(std::int64_t epoch_seconds);

}  // namespace govdec
