#include "govdec/ledger.hpp"

#include <fcntl.h>
#include <sys/stat.h>
#include <unistd.h>

#include <array>
#include <cerrno>
#include <chrono>
#include <cstring>
#include <ctime>
#include <fstream>
#include <mutex>
#include <sstream>

#include "govdec/error.hpp"

namespace govdec {

namespace {

constexpr std::array<std::string_view, 7> kEntryTypeNames = {
    "step_completed", "orchestrator_decision", "governance_action", "hitl_transition",
    "guardrail_event", "work_order", "system",
};

std::string system_timestamp(std::uint64_t) {
  const auto now = std::chrono::system_clock::now();
  return iso8601_utc(
      std::chrono::duration_cast<std::chrono::seconds>(now.time_since_epoch()).count());
}

void write_all(int fd, const std::string& data) {
  std::size_t off = 0;
  while (off < data.size()) {
    const ssize_t n = ::write(fd, data.data() + off, data.size() - off);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw StorageError(std::string("ledger write failed: ") + std::strerror(errno));
    }
    off += static_cast<std::size_t>(n);
  }
}

}  // namespace

std::string_view to_string(EntryType t) noexcept {
  return kEntryTypeNames[static_cast<std::size_t>(t)];
}

std::optional<EntryType> parse_entry_type(std::string_view s) noexcept {
  for (std::size_t i = 0; i < kEntryTypeNames.size(); ++i) {
    if (kEntryTypeNames[i] == s) return static_cast<EntryType>(i);
  }
  return std::nullopt;
}

const std::string& chain_seed() {
  static const std::string seed = sha256_hex(kGenesisConstant);
  return seed;
}

std::string entry_hash(std::string_view prior_hash_hex, const json& content) {
  std::string buf(prior_hash_hex);
  buf += canonical_json(content);
  return sha256_hex(buf);
}

std::string LedgerEntry::to_line() const {
  json line = {
      {"index", index},
      {"entry_type", std::string(to_string(entry_type))},
      {"content", content},
      {"prior_hash", prior_hash},
      {"hash", hash},
  };
  return canonical_json(line);
}

LedgerEntry LedgerEntry::from_line(std::string_view line) {
  json j = json::parse(line);
  LedgerEntry e;
  e.index = j.at("index").get<std::uint64_t>();
  const auto type = parse_entry_type(j.at("entry_type").get<std::string>());
  if (!type) throw SerializationError("unknown entry_type in ledger line");
  e.entry_type = *type;
  e.content = j.at("content");
  e.prior_hash = j.at("prior_hash").get<std::string>();
  e.hash = j.at("hash").get<std::string>();
  return e;
}

json ChainVerification::to_json() const {
  json j = {{"chain_valid", chain_valid}, {"entries_checked", entries_checked}};
  if (first_broken_index) j["first_broken_index"] = *first_broken_index;
  return j;
}

ChainVerification verify_chain(const std::vector<LedgerEntry>& entries,
                               const VerifyOptions& options) {
  ChainVerification result;
  std::string expected_prior = chain_seed();
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const LedgerEntry& e = entries[i];
    result.entries_checked = i + 1;
    bool ok = e.index == i;
    if (ok) {
      const bool legacy_ok = i == 0 && options.accept_legacy_zero_seed &&
                             e.prior_hash == kLegacyZeroSeed;
      ok = e.prior_hash == expected_prior || legacy_ok;
    }
    if (ok) {
      try {
        ok = entry_hash(e.prior_hash, e.content) == e.hash;
      } catch (const SerializationError&) {
        ok = false;
      }
    }
    // Envelope fields that are mirrored inside the hashed content must agree.
    if (ok && e.content.is_object()) {
      if (auto it = e.content.find("index"); it != e.content.end()) {
        ok = it->is_number_unsigned() || it->is_number_integer()
                 ? it->get<std::int64_t>() == static_cast<std::int64_t>(e.index)
                 : false;
      }
      if (auto it = e.content.find("entry_type"); ok && it != e.content.end()) {
        ok = it->is_string() && it->get<std::string>() == to_string(e.entry_type);
      }
    }
    if (!ok) {
      result.chain_valid = false;
      result.first_broken_index = i;
      return result;
    }
    expected_prior = e.hash;
  }
  return result;
}

ChainVerification verify_ledger_file(const std::filesystem::path& path,
                                     const VerifyOptions& options) {
  std::ifstream in(path);
  if (!in) throw StorageError("cannot open ledger file: " + path.string());
  std::vector<LedgerEntry> entries;
  std::string line;
  std::uint64_t idx = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    try {
      entries.push_back(LedgerEntry::from_line(line));
    } catch (const std::exception&) {
      // Verify what came before; this line is where the chain breaks.
      auto partial = verify_chain(entries, options);
      if (!partial.chain_valid) return partial;
      ChainVerification broken;
      broken.chain_valid = false;
      broken.first_broken_index = idx;
      broken.entries_checked = idx + 1;
      return broken;
    }
    ++idx;
  }
  return verify_chain(entries, options);
}

Ledger::Ledger() : clock_(system_timestamp) {}

Ledger::~Ledger() {
  if (fd_ >= 0) ::close(fd_);
}

std::unique_ptr<Ledger> Ledger::open(const std::filesystem::path& path) {
  auto ledger = std::make_unique<Ledger>();
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());

  std::string data;
  if (std::filesystem::exists(path)) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    data = ss.str();
  }
  // Keep only complete lines; a crash mid-append leaves a partial tail.
  std::size_t keep = 0;
  std::size_t start = 0;
  while (true) {
    const std::size_t nl = data.find('\n', start);
    if (nl == std::string::npos) break;
    const std::string_view line(data.data() + start, nl - start);
    if (!line.empty()) {
      try {
        ledger->entries_.push_back(LedgerEntry::from_line(line));
      } catch (const std::exception& e) {
        throw StorageError("corrupt ledger line " + std::to_string(ledger->entries_.size()) +
                           " in " + path.string() + ": " + e.what());
      }
    }
    start = nl + 1;
    keep = start;
  }
  if (keep != data.size()) std::filesystem::resize_file(path, keep);

  ledger->fd_ = ::open(path.c_str(), O_WRONLY | O_CREAT | O_APPEND | O_CLOEXEC, 0644);
  if (ledger->fd_ < 0) {
    throw StorageError("cannot open ledger for append: " + path.string() + ": " +
                       std::strerror(errno));
  }
  ledger->path_ = path;
  return ledger;
}

LedgerEntry Ledger::append_raw(EntryType type, json content) {
  return append_impl(type, std::move(content), false);
}

LedgerEntry Ledger::append(EntryType type, json content) {
  if (!content.is_object()) throw SerializationError("ledger content must be an object");
  return append_impl(type, std::move(content), true);
}

LedgerEntry Ledger::append_impl(EntryType type, json content, bool stamp) {
  std::unique_lock lock(mutex_);
  LedgerEntry e;
  e.index = entries_.size();
  e.entry_type = type;
  if (stamp) {
    content["index"] = e.index;
    content["entry_type"] = std::string(to_string(type));
    if (!content.contains("timestamp")) content["timestamp"] = clock_(e.index);
  }
  e.content = std::move(content);
  e.prior_hash = entries_.empty() ? chain_seed() : entries_.back().hash;
  e.hash = entry_hash(e.prior_hash, e.content);  // throws SerializationError
  if (fd_ >= 0) {
    write_all(fd_, e.to_line() + "\n");
    if (::fsync(fd_) != 0) {
      throw StorageError(std::string("ledger fsync failed: ") + std::strerror(errno));
    }
  }
  entries_.push_back(e);
  AppendHook hook = hook_;
  lock.unlock();
  if (hook) hook(e);
  return e;
}

void Ledger::set_clock(Clock clock) {
  std::unique_lock lock(mutex_);
  clock_ = std::move(clock);
}

void Ledger::set_append_hook(AppendHook hook) {
  std::unique_lock lock(mutex_);
  hook_ = std::move(hook);
}

std::vector<LedgerEntry> Ledger::snapshot() const {
  std::shared_lock lock(mutex_);
  return entries_;
}

std::size_t Ledger::size() const {
  std::shared_lock lock(mutex_);
  return entries_.size();
}

std::string Ledger::head_hash() const {
  std::shared_lock lock(mutex_);
  return entries_.empty() ? chain_seed() : entries_.back().hash;
}

ChainVerification Ledger::verify(const VerifyOptions& options) const {
  return verify_chain(snapshot(), options);
}

std::string iso8601_utc(std::int64_t epoch_seconds) {
  const std::time_t t = static_cast<std::time_t>(epoch_seconds);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace govdec
