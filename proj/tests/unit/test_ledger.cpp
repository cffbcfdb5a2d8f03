#include <doctest.h>

#include <fstream>

#include "govdec/error.hpp"
#include "govdec/ledger.hpp"
#include "govdec/store.hpp"
#include "support.hpp"

using namespace govdec;

// Digests below were computed with Python's hashlib and json.dumps(sort_keys=True,
// separators=(",", ":"), ensure_ascii=True), independently of this library.
namespace {
constexpr const char* kSeed = "edfb91cab7198872d7cb23ef3d39cb9a129ddc0ad8d3b2ddba8845e049a5ed74";
constexpr const char* kEmptyGenesis = "673ec073164aa1f51597e14aba4b811c6c145e21d8ff98e54df5985549ab14ec";
constexpr const char* kMixedGenesis = "aacdf738e71279a31fed274526c095ca578478e9799e5703d19f5e08f19363b6";
}  // namespace

TEST_SUITE("ledger") {

TEST_CASE("chain seed is the digest of the genesis constant") {
  CHECK(chain_seed() == kSeed);
  CHECK(sha256_hex("cognitive-core-genesis-v1") == kSeed);
}

TEST_CASE("canonical serialization") {
  CHECK(canonical_json(json::parse(R"({"b":1,"a":2})")) == R"({"a":2,"b":1})");
  CHECK(canonical_json(json{{"a", "\xc3\xa9"}, {"b", 1}, {"conf", "0.850000"}}) ==
        R"({"a":"\u00e9","b":1,"conf":"0.850000"})");
  CHECK_THROWS_AS(canonical_json(json::parse(R"({"x":0.5})")), SerializationError);
  CHECK_THROWS_AS(canonical_json(json::parse(R"({"x":null})")), SerializationError);
  CHECK(canonical_json(json::parse(R"({"k":[3,{"z":true,"y":false}]})")) == R"({"k":[3,{"y":false,"z":true}]})");
}

TEST_CASE("canonical value mapping renders floats as six-decimal strings") {
  const json v = to_canonical_value(json::parse(R"({"a":0.85,"b":null,"c":[null,1.0]})"));
  CHECK(v == json::parse(R"({"a":"0.850000","c":["null","1.000000"]})"));
}

TEST_CASE("genesis entries hash over seed and canonical content") {
  Ledger l;
  const LedgerEntry e = l.append_raw(EntryType::System, json::object());
  CHECK(e.prior_hash == kSeed);
  CHECK(e.hash == kEmptyGenesis);
  Ledger m;
  CHECK(m.append_raw(EntryType::System, json{{"b", 1}, {"a", "\xc3\xa9"}, {"conf", "0.850000"}}).hash ==
        kMixedGenesis);
}

TEST_CASE("append rejects raw floats and stamps index, type and time") {
  Ledger l;
  CHECK_THROWS_AS(l.append(EntryType::System, json{{"x", 0.5}}), SerializationError);
  CHECK(l.size() == 0);
  l.set_clock([](std::uint64_t i) { return iso8601_utc(1767225600 + static_cast<std::int64_t>(i)); });
  const auto e = l.append(EntryType::StepCompleted, json{{"step_name", "retrieve_1"}});
  CHECK(e.content["index"] == 0);
  CHECK(e.content["entry_type"] == "step_completed");
  CHECK(e.content["timestamp"] == "2026-01-01T00:00:00Z");
}

TEST_CASE("identical content chains to different hashes") {
  Ledger l;
  const auto a = l.append_raw(EntryType::System, json{{"k", 1}});
  const auto b = l.append_raw(EntryType::System, json{{"k", 1}});
  CHECK(a.hash != b.hash);
  CHECK(b.prior_hash == a.hash);
}

TEST_CASE("verify finds the first broken link") {
  Ledger l;
  for (int i = 0; i < 20; ++i) l.append(EntryType::System, json{{"n", i}});
  auto v = l.verify();
  CHECK(v.chain_valid);
  CHECK(v.entries_checked == 20);
  auto entries = l.snapshot();
  entries[7].content["n"] = 70;
  v = verify_chain(entries);
  CHECK_FALSE(v.chain_valid);
  CHECK(v.first_broken_index == 7);
  CHECK(verify_chain({}).chain_valid);
  CHECK(verify_chain({}).entries_checked == 0);
}

TEST_CASE("legacy all-zero seed only verifies when allowed") {
  std::vector<LedgerEntry> entries(1);
  entries[0].content = json{{"k", 1}};
  entries[0].prior_hash = std::string(kLegacyZeroSeed);
  entries[0].hash = entry_hash(kLegacyZeroSeed, entries[0].content);
  CHECK_FALSE(verify_chain(entries).chain_valid);
  CHECK(verify_chain(entries, {true}).chain_valid);
}

TEST_CASE("file ledger persists, reopens and drops a torn tail") {
  const auto dir = support::scratch("ledger");
  const auto path = dir / "l.ndjson";
  std::string head;
  {
    auto l = Ledger::open(path);
    for (int i = 0; i < 5; ++i) l->append(EntryType::System, json{{"n", i}});
    head = l->head_hash();
  }
  { std::ofstream(path, std::ios::app) << R"({"content":{"n":)"; }
  auto l = Ledger::open(path);
  CHECK(l->size() == 5);
  CHECK(l->head_hash() == head);
  CHECK(verify_ledger_file(path).chain_valid);
  l->append(EntryType::System, json{{"n", 5}});
  CHECK(verify_ledger_file(path).entries_checked == 6);
}

TEST_CASE("a flipped character in a file is reported at its line") {
  const auto dir = support::scratch("tamper");
  const auto path = dir / "l.ndjson";
  {
    auto l = Ledger::open(path);
    for (int i = 0; i < 10; ++i) l->append(EntryType::System, json{{"word", "alpha"}});
  }
  std::vector<std::string> lines;
  {
    std::ifstream in(path);
    for (std::string s; std::getline(in, s);) lines.push_back(s);
  }
  lines[4].replace(lines[4].find("alpha"), 5, "alphb");
  {
    std::ofstream out(path, std::ios::trunc);
    for (const auto& s : lines) out << s << "\n";
  }
  const auto v = verify_ledger_file(path);
  CHECK_FALSE(v.chain_valid);
  CHECK(v.first_broken_index == 4);
}

TEST_CASE("store keeps values and a ledger index") {
  Store s(":memory:");
  s.put("instances", "A001-1", json{{"status", "completed"}});
  CHECK(s.get("instances", "A001-1")->at("status") == "completed");
  CHECK_FALSE(s.get("instances", "missing").has_value());
  CHECK(s.list("instances").size() == 1);
  Ledger l;
  const auto e = l.append(EntryType::System, json{{"event", "x"}});
  s.index_entry("A001-1", e);
  s.index_entry("A001-1", e);
  CHECK(s.indexed_count("A001-1") == 1);
  CHECK(s.indexed_hash("A001-1", 0) == e.hash);
  s.erase("instances", "A001-1");
  CHECK(s.list("instances").empty());
}

}
