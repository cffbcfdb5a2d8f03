#pragma once

#include <condition_variable>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "govdec/runtime.hpp"
#include "govdec/store.hpp"

namespace govdec {

/// One ledger entry as the trace stream presents it.
struct TraceEvent {
  std::string event_type;
  std::string instance_id;
  /// Ledger index + 1, so 0 can mean "from the start" on reconnect.
  std::uint64_t sequence = 0;
  json payload;

  json to_json() const;
};

TraceEvent trace_event(const std::string& instance_id, const LedgerEntry& e);
/// completed and terminated close a stream.
bool closes_stream(const TraceEvent& ev);

struct EngineOptions {
  std::filesystem::path data_dir;
  Backend* backend = nullptr;
  ModelPolicy policy = ModelPolicy::defaults();
  /// Ledger clock for every instance; system time when unset.
  std::function<Ledger::Clock(const std::string& instance_id)> clock_for;
  std::function<std::int64_t()> now;
  KillSwitchBoard* kill_switches = nullptr;
};

/// Submission of one case.
struct StartRequest {
  json case_body;
  std::filesystem::path workflow_path;
  std::filesystem::path domain_path;
};

/// Registry of instances backed by per-instance directories under
/// <data_dir>/instances. Each directory holds the manifest (what to rebuild
/// from) and the ledger (what happened).
class Engine {
 public:
  explicit Engine(EngineOptions options);
  ~Engine();
  Engine(const Engine&) = delete;
  Engine& operator=(const Engine&) = delete;

  /// Creates the instance and runs it, inline or on a worker thread.
  std::string start(const StartRequest& req, bool async = false);

  /// Reopens every instance on disk. Instances that were mid-run continue
  /// (asynchronously when `async`); suspended ones stay suspended.
  std::vector<std::string> recover_all(bool async = false);

  std::shared_ptr<Instance> get(const std::string& instance_id) const;
  std::vector<json> list() const;
  std::vector<std::string> ids() const;

  /// accept | approve | reject | reassign | terminate. Runs the instance
  /// afterwards when the review resolved its group.
  json review(const std::string& instance_id, const std::string& action, const Actor& actor, const json& body,
              bool async = false);

  /// Continues an instance (after a kill-switch release, say).
  void resume(const std::string& instance_id, bool async = false);

  /// Blocks until the instance's worker (if any) has finished.
  void wait(const std::string& instance_id);
  void wait_all();

  std::vector<std::string> sweep_sla(std::int64_t now);

  /// Events with sequence > after_sequence; waits up to `timeout` for new
  /// ones when none are available.
  std::vector<TraceEvent> events_after(const std::string& instance_id, std::uint64_t after_sequence,
                                       std::chrono::milliseconds timeout);

  Store& store() { return *store_; }
  const std::filesystem::path& data_dir() const { return opts_.data_dir; }
  KillSwitchBoard& kill_switches() { return *kill_switches_; }

 private:
  std::shared_ptr<Instance> open(const std::string& instance_id, const json& manifest);
  void launch(const std::string& instance_id, bool async);
  std::string allocate_id(const std::string& case_id);
  std::filesystem::path instance_dir(const std::string& instance_id) const;

  EngineOptions opts_;
  std::unique_ptr<Store> store_;
  std::unique_ptr<KillSwitchBoard> own_switches_;
  KillSwitchBoard* kill_switches_ = nullptr;

  mutable std::mutex mu_;
  std::map<std::string, std::shared_ptr<Instance>> instances_;
  std::map<std::string, std::thread> workers_;
  std::map<std::string, std::string> errors_;

  std::mutex feed_mu_;
  std::condition_variable feed_cv_;
  std::uint64_t feed_version_ = 0;
};

}  // namespace govdec
