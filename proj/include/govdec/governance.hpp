#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "govdec/config.hpp"
#include "govdec/epistemic.hpp"

namespace govdec {

struct TierLock {
  Tier tier = Tier::Auto;
  std::uint64_t locked_at = 0;
  std::string rationale;

  json to_json() const;
};

struct TierApplication {
  TierLock lock;
  /// The proposal was below the current tier and changed nothing.
  bool lowering_noop = false;
  bool raised = false;
};

/// Result tier = max(domain default, current, proposed). A lower proposal is
/// a recorded no-op; the rationale grows only when the tier rises.
TierApplication apply_tier(const std::optional<TierLock>& current, Tier proposed, const std::string& rationale,
                           Tier domain_default = Tier::Auto, std::uint64_t ledger_index = 0);

struct AttemptRecord {
  int attempt = 1;
  bool ok = false;
  std::optional<double> confidence;
  std::optional<int> salvage_stage;
  std::string diagnostics;

  json to_json() const;
};

struct StepAttempts {
  std::string step_id;
  Primitive kind = Primitive::Retrieve;
  std::vector<AttemptRecord> attempts;
};

struct QualityGateConfig {
  std::map<Primitive, double> confidence_floors;
  Tier escalate_to = Tier::Gate;
};

struct QualityGateResult {
  std::optional<Tier> proposal;
  std::vector<std::string> breaches;
};

/// Floors are checked against each step's final successful attempt only.
QualityGateResult quality_gate(const std::vector<StepAttempts>& steps, const QualityGateConfig& config);

enum class RecordStatus : std::uint8_t { Supported, Degraded, Insufficient };
std::string_view to_string(RecordStatus s) noexcept;

/// SUPPORTED: all warranted and no flags. INSUFFICIENT: any warranted=false.
/// DEGRADED: otherwise, when any warning flag or any overall in [0.5, 0.7).
RecordStatus classify_record(const WorkflowEpistemicRecord& record);

struct WorkOrderSpec {
  std::string kind = "human_review";
  DelegationMode mode = DelegationMode::WaitForResult;
  int sla_hours = 72;
  int reviewers = 1;
  int quorum = 0;
  std::string reason;

  json to_json() const;
};

struct GovernDetermination {
  Tier tier_applied = Tier::Auto;
  std::string disposition;
  std::optional<WorkOrderSpec> work_order;
  std::string tier_rationale;
  RecordStatus record_status = RecordStatus::Supported;
  /// Rubric rules that fired, e.g. "a", "c", "d".
  std::vector<std::string> rules_fired;
  /// Non-routing metadata: QA sampling rate for SPOT_CHECK.
  double spot_check_rate = 0.0;

  json to_json() const;
};

/// Deterministic rubric applied before any model involvement:
///  (a) critical guardrail event -> HOLD
///  (b) a step unwarranted by a critical flag, or INSUFFICIENT record -> HOLD
///  (c) >= 2 challenge cycles and none survived, warning flags, or DEGRADED -> GATE
///  (d) high-stakes disposition -> at least GATE
///  (e) otherwise SPOT_CHECK; AUTO only for automatable decision classes
///      with a SUPPORTED, flag-free record meeting every floor.
/// Throws MissingDeliberate.
GovernDetermination evaluate_govern(const WorkflowEpistemicRecord& record, const std::vector<StepOutputRef>& outputs,
                                    const DomainConfig& domain);

/// Finalizes a determination at `tier` (attaches or drops the work order).
void settle_tier(GovernDetermination& d, Tier tier, const DomainConfig& domain);

}  // namespace govdec
