#pragma once

#include <chrono>
#include <filesystem>
#include <functional>
#include <future>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "govdec/config.hpp"
#include "govdec/epistemic.hpp"
#include "govdec/governance.hpp"
#include "govdec/hitl.hpp"
#include "govdec/kernel.hpp"
#include "govdec/ledger.hpp"
#include "govdec/llm.hpp"
#include "govdec/orchestrator.hpp"
#include "govdec/safety.hpp"

namespace govdec {

class Store;

enum class InstanceStatus : std::uint8_t { Running, Suspended, Completed, Terminated, Halted };
std::string_view to_string(InstanceStatus s) noexcept;

struct RuntimeOptions {
  /// Ledger timestamps; system time when unset.
  Ledger::Clock ledger_clock;
  /// Epoch seconds for SLA deadlines; system time when unset.
  std::function<std::int64_t()> now;
  std::size_t step_cap = kernel::kDefaultStepCap;
  std::chrono::milliseconds stall_timeout = std::chrono::minutes(15);
  Store* store = nullptr;
  KillSwitchBoard* kill_switches = nullptr;
  /// Called after every ledger append (SSE fan-out, crash tests).
  std::function<void(const LedgerEntry&)> on_append;
};

/// Index clock: base + index seconds. Reruns produce identical timestamps.
Ledger::Clock deterministic_clock(std::int64_t base_epoch_seconds);

struct StepRecord {
  OrchestratorDecision decision;
  std::uint64_t decision_index = 0;
  std::uint64_t ledger_index = 0;
  Primitive kind = Primitive::Retrieve;
  std::string step_name;
  bool failed = false;
  std::optional<CognitiveOutput> output;
  /// Fully resolved parameters.
  json params = json::object();
  StepEpistemicState state;
  std::vector<AttemptRecord> attempts;
  std::optional<GuardVerdict> guard;
  ModelChoice model;
};

/// Everything needed to (re)build an instance.
struct InstanceSpec {
  std::string instance_id;
  CaseInput case_input;
  WorkflowConfig workflow;
  DomainConfig domain;
};

/// One workflow instance. State is event-sourced from its ledger: opening
/// an instance over an existing ledger replays it and continues exactly
/// where the previous process stopped.
class Instance {
 public:
  Instance(InstanceSpec spec, std::filesystem::path dir, Backend& backend, ModelPolicy policy,
           RuntimeOptions options = {});
  ~Instance();
  Instance(const Instance&) = delete;
  Instance& operator=(const Instance&) = delete;

  /// Advances until the instance completes, terminates, halts or suspends.
  InstanceStatus run();

  // Review actions. Each validates against the HITL table (throwing
  // IllegalStateTransition / UnauthorizedActor) and records the move only.
  // The next run() acts on a resolved group (resume, rework or terminate).
  void accept(const Actor& actor, const std::optional<std::string>& order_id = {});
  void approve(const Actor& actor, const std::string& note, const std::optional<std::string>& order_id = {});
  /// Empty resume_step terminates the instance.
  void reject(const Actor& actor, const std::string& note, const std::string& resume_step,
              const std::optional<std::string>& order_id = {});
  void reassign(const Actor& actor, const std::optional<std::string>& order_id = {});
  /// Ends a timed-out review without a verdict.
  void terminate_timed_out(const Actor& actor, const std::string& note,
                           const std::optional<std::string>& order_id = {});
  std::vector<std::string> sweep_sla(std::int64_t now);

  /// Clears a halt recorded by the kill switch and continues.
  InstanceStatus release_halt(const std::string& reason);

  const std::string& id() const { return spec_.instance_id; }
  const InstanceSpec& spec() const { return spec_; }
  InstanceStatus status() const;
  std::vector<StepRecord> steps() const;
  WorkflowEpistemicRecord record() const;
  TierLock tier_lock() const;
  std::optional<GovernDetermination> determination() const;
  std::vector<WorkOrder> orders() const;
  std::vector<GuardrailFinding> findings() const;
  const RedactionMap& redaction_map() const { return redaction_; }
  json case_view() const { return case_view_; }
  int chooser_calls() const;
  Ledger& ledger() { return *ledger_; }
  std::vector<LedgerEntry> ledger_entries() const { return ledger_->snapshot(); }
  std::filesystem::path ledger_path() const { return dir_ / "ledger.ndjson"; }

  /// Compact status for listings.
  json summary() const;
  /// Full state including the ledger.
  json to_json() const;

 private:
  enum class Action : std::uint8_t {
    None, Start, Decide, Directive, Execute, Determine, Dispatch, Settle, ApplyApproved, ApplyRejected
  };

  struct StepDelivery {
    ExecutionResult result;
    std::exception_ptr error;
  };
  struct ResumeSignal {};

  void replay(const std::vector<LedgerEntry>& entries);
  void replay_step(const json& content, std::uint64_t index);

  Action next_action() const;
  std::int64_t now() const;
  LedgerEntry append(EntryType type, json content);
  WorkflowSnapshot snapshot() const;
  std::vector<StepView> views() const;
  std::vector<StepOutputRef> output_refs() const;
  const StepRecord* last_step() const;
  std::vector<WorkOrder*> current_group();
  std::vector<const WorkOrder*> current_group() const;
  WorkOrder& pick_order(HitlState from, HitlState to, const std::optional<std::string>& order_id);
  GroupOutcome current_outcome() const;

  InstanceStatus run_locked();
  kernel::Transition execute_orchestrator();
  kernel::Transition execute_step(const kernel::StepComponent& c, std::optional<kernel::InjectedEvent> delivery);
  kernel::Transition after_govern(std::optional<std::string> completed);

  void do_start();
  void do_decide(bool directive);
  void record_decision(OrchestratorDecision d);
  StepRecord complete_step(const OrchestratorDecision& d, const ExecutionResult& r, const json& params);
  void assess(StepRecord& rec) const;
  void do_determine();
  void do_dispatch();
  void do_settle();
  void do_apply_approved();
  void do_apply_rejected();
  std::pair<GovernDetermination, TierApplication> compute_determination() const;
  bool dispatch_complete(const std::string& govern_step) const;
  std::size_t expected_orders(const std::string& govern_step) const;
  void publish();

  InstanceSpec spec_;
  std::filesystem::path dir_;
  Backend& backend_;
  ModelPolicy policy_;
  RuntimeOptions opts_;
  Orchestrator orchestrator_;
  std::unique_ptr<Ledger> ledger_;
  std::unique_ptr<kernel::WorkflowModel> model_;
  std::future<void> worker_;
  mutable std::recursive_mutex mu_;

  // State rebuilt from the ledger.
  bool started_ = false;
  InstanceStatus status_ = InstanceStatus::Running;
  json case_view_ = json::object();
  RedactionMap redaction_;
  std::vector<GuardrailFinding> findings_;
  std::vector<StepRecord> steps_;
  WorkflowEpistemicRecord record_;
  std::vector<StepAttempts> attempts_;
  std::optional<OrchestratorDecision> pending_;
  std::uint64_t pending_index_ = 0;
  int chooser_calls_ = 0;
  std::optional<TierLock> tier_lock_;
  std::set<std::string> resumed_;
  mutable std::mutex cache_mu_;
  json summary_cache_ = json::object();
  std::map<std::string, GovernDetermination> determinations_;
  std::set<std::string> dispatched_;
  std::set<std::string> settled_;
  std::vector<WorkOrder> orders_;
  std::string current_group_;
  int dispatch_cycles_ = 0;
  std::optional<std::string> directive_step_;
  std::optional<std::string> reviewer_note_;
  bool halted_ = false;
  std::vector<std::string> routing_log_;
};

}  // namespace govdec
