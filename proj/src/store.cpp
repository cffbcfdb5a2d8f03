#include "govdec/store.hpp"

#include <sqlite3.h>

#include "govdec/error.hpp"

namespace govdec {

namespace {

/// RAII prepared statement.
class Stmt {
 public:
  Stmt(sqlite3* db, const char* sql) : db_(db) {
    if (sqlite3_prepare_v2(db, sql, -1, &st_, nullptr) != SQLITE_OK) {
      throw StorageError(std::string("prepare failed: ") + sqlite3_errmsg(db));
    }
  }
  ~Stmt() { sqlite3_finalize(st_); }
  Stmt(const Stmt&) = delete;
  Stmt& operator=(const Stmt&) = delete;

  Stmt& bind(int i, const std::string& s) {
    sqlite3_bind_text(st_, i, s.data(), static_cast<int>(s.size()), SQLITE_TRANSIENT);
    return *this;
  }
  Stmt& bind(int i, std::int64_t v) {
    sqlite3_bind_int64(st_, i, v);
    return *this;
  }
  /// True while rows remain.
  bool step() {
    const int rc = sqlite3_step(st_);
    if (rc == SQLITE_ROW) return true;
    if (rc == SQLITE_DONE) return false;
    throw StorageError(std::string("step failed: ") + sqlite3_errmsg(db_));
  }
  std::string text(int col) const {
    const auto* p = sqlite3_column_text(st_, col);
    return p ? std::string(reinterpret_cast<const char*>(p), static_cast<std::size_t>(sqlite3_column_bytes(st_, col)))
             : std::string();
  }
  std::int64_t integer(int col) const { return sqlite3_column_int64(st_, col); }

 private:
  sqlite3* db_;
  sqlite3_stmt* st_ = nullptr;
};

}  // namespace

Store::Store(const std::string& path) {
  if (sqlite3_open_v2(path.c_str(), &db_, SQLITE_OPEN_READWRITE | SQLITE_OPEN_CREATE | SQLITE_OPEN_FULLMUTEX,
                      nullptr) != SQLITE_OK) {
    std::string msg = db_ ? sqlite3_errmsg(db_) : "out of memory";
    sqlite3_close(db_);
    throw StorageError("cannot open store " + path + ": " + msg);
  }
  sqlite3_busy_timeout(db_, 5000);
  exec("PRAGMA journal_mode=WAL");
  exec("CREATE TABLE IF NOT EXISTS kv (ns TEXT NOT NULL, key TEXT NOT NULL, value TEXT NOT NULL, "
       "PRIMARY KEY (ns, key))");
  exec("CREATE TABLE IF NOT EXISTS ledger_index (instance_id TEXT NOT NULL, idx INTEGER NOT NULL, "
       "entry_type TEXT NOT NULL, hash TEXT NOT NULL, PRIMARY KEY (instance_id, idx))");
}

Store::~Store() { sqlite3_close(db_); }

void Store::exec(const char* sql) {
  char* err = nullptr;
  if (sqlite3_exec(db_, sql, nullptr, nullptr, &err) != SQLITE_OK) {
    std::string msg = err ? err : "unknown error";
    sqlite3_free(err);
    throw StorageError(msg);
  }
}

void Store::put(const std::string& ns, const std::string& key, const json& value) {
  std::lock_guard lock(mu_);
  Stmt s(db_, "INSERT INTO kv (ns, key, value) VALUES (?1, ?2, ?3) "
              "ON CONFLICT (ns, key) DO UPDATE SET value = excluded.value");
  s.bind(1, ns).bind(2, key).bind(3, value.dump());
  s.step();
}

std::optional<json> Store::get(const std::string& ns, const std::string& key) const {
  std::lock_guard lock(mu_);
  Stmt s(db_, "SELECT value FROM kv WHERE ns = ?1 AND key = ?2");
  s.bind(1, ns).bind(2, key);
  if (!s.step()) return std::nullopt;
  return json::parse(s.text(0));
}

std::vector<std::pair<std::string, json>> Store::list(const std::string& ns) const {
  std::lock_guard lock(mu_);
  Stmt s(db_, "SELECT key, value FROM kv WHERE ns = ?1 ORDER BY key");
  s.bind(1, ns);
  std::vector<std::pair<std::string, json>> out;
  while (s.step()) out.emplace_back(s.text(0), json::parse(s.text(1)));
  return out;
}

void Store::erase(const std::string& ns, const std::string& key) {
  std::lock_guard lock(mu_);
  Stmt s(db_, "DELETE FROM kv WHERE ns = ?1 AND key = ?2");
  s.bind(1, ns).bind(2, key);
  s.step();
}

void Store::index_entry(const std::string& instance_id, const LedgerEntry& entry) {
  std::lock_guard lock(mu_);
  Stmt s(db_, "INSERT INTO ledger_index (instance_id, idx, entry_type, hash) VALUES (?1, ?2, ?3, ?4) "
              "ON CONFLICT (instance_id, idx) DO UPDATE SET entry_type = excluded.entry_type, hash = excluded.hash");
  s.bind(1, instance_id)
      .bind(2, static_cast<std::int64_t>(entry.index))
      .bind(3, std::string(to_string(entry.entry_type)))
      .bind(4, entry.hash);
  s.step();
}

std::optional<std::string> Store::indexed_hash(const std::string& instance_id, std::uint64_t index) const {
  std::lock_guard lock(mu_);
  Stmt s(db_, "SELECT hash FROM ledger_index WHERE instance_id = ?1 AND idx = ?2");
  s.bind(1, instance_id).bind(2, static_cast<std::int64_t>(index));
  if (!s.step()) return std::nullopt;
  return s.text(0);
}

std::uint64_t Store::indexed_count(const std::string& instance_id) const {
  std::lock_guard lock(mu_);
  Stmt s(db_, "SELECT COUNT(*) FROM ledger_index WHERE instance_id = ?1");
  s.bind(1, instance_id);
  s.step();
  return static_cast<std::uint64_t>(s.integer(0));
}

}  // namespace govdec
