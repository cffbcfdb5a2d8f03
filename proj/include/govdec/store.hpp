#pragma once

#include <filesystem>
#include <mutex>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "govdec/ledger.hpp"

struct sqlite3;

namespace govdec {

/// Embedded transactional key-value store plus a ledger index. It is a
/// cache: every instance can be rebuilt from its ledger file.
class Store {
 public:
  /// ":memory:" gives a private in-memory store. Throws StorageError.
  explicit Store(const std::string& path);
  ~Store();
  Store(const Store&) = delete;
  Store& operator=(const Store&) = delete;

  void put(const std::string& ns, const std::string& key, const json& value);
  std::optional<json> get(const std::string& ns, const std::string& key) const;
  std::vector<std::pair<std::string, json>> list(const std::string& ns) const;
  void erase(const std::string& ns, const std::string& key);

  /// Records (instance, index) -> (entry type, hash). Re-indexing an entry
  /// with the same hash is a no-op.
  void index_entry(const std::string& instance_id, const LedgerEntry& entry);
  std::optional<std::string> indexed_hash(const std::string& instance_id, std::uint64_t index) const;
  std::uint64_t indexed_count(const std::string& instance_id) const;

 private:
  void exec(const char* sql);

  mutable std::mutex mu_;
  sqlite3* db_ = nullptr;
};

}  // namespace govdec
