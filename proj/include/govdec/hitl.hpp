#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "govdec/config.hpp"
#include "govdec/governance.hpp"

namespace govdec {

class Ledger;

enum class HitlState : std::uint8_t {
  Suspended,
  PendingReview,
  Assigned,
  UnderReview,
  Approved,
  Rejected,
  TimedOut,
  Resumed,
  Terminated,
};

inline constexpr std::array<HitlState, 9> kAllHitlStates = {
    HitlState::Suspended, HitlState::PendingReview, HitlState::Assigned,
    HitlState::UnderReview, HitlState::Approved,      HitlState::Rejected,
    HitlState::TimedOut,  HitlState::Resumed,       HitlState::Terminated,
};

std::string_view to_string(HitlState s) noexcept;
std::optional<HitlState> parse_hitl_state(std::string_view s) noexcept;

bool hitl_legal(HitlState from, HitlState to) noexcept;
/// The legal pairs, in table order.
const std::vector<std::pair<HitlState, HitlState>>& hitl_table();

/// States with a running SLA timer.
bool sla_armed(HitlState s) noexcept;

enum class Role : std::uint8_t { System, Reviewer, Operator };
std::string_view to_string(Role r) noexcept;
std::optional<Role> parse_role(std::string_view s) noexcept;

struct Actor {
  std::string id;
  Role role = Role::System;

  static Actor system() { return {"system", Role::System}; }
};

/// Throws UnauthorizedActor unless the actor's role may move an order into `to`.
void check_authorized(HitlState to, const Actor& actor);

enum class WorkOrderKind : std::uint8_t { HumanReview, SpecialistWorkflow };
std::string_view to_string(WorkOrderKind k) noexcept;

/// What a reviewer asks for on rejection.
struct ResumeDirective {
  /// Empty means terminate.
  std::string resume_step;
};

struct WorkOrder {
  std::string order_id;
  std::string instance_id;
  WorkOrderKind kind = WorkOrderKind::HumanReview;
  DelegationMode mode = DelegationMode::WaitForResult;
  /// Orders fanned out together share a group.
  std::string group_id;
  json payload = json::object();
  int sla_hours = 72;
  std::optional<std::int64_t> sla_deadline;  // epoch seconds, set while armed
  HitlState state = HitlState::Suspended;
  std::string assignee;
  std::vector<std::string> notes;
  std::optional<ResumeDirective> directive;

  json to_json() const;
  static WorkOrder from_json(const json& j);
};

/// Validates and applies one transition. Appends a hitl_transition entry
/// when a ledger is given and re-arms or clears the SLA timer. Throws
/// IllegalStateTransition or UnauthorizedActor, leaving the order intact.
void transition(WorkOrder& order, HitlState to, const Actor& actor, const std::string& note, Ledger* ledger,
                std::int64_t now);

struct Dispatch {
  std::vector<WorkOrder> orders;
  /// False for AUTO/SPOT_CHECK and for fire-and-forget orders.
  bool suspends = false;
};

/// GATE/HOLD determinations produce orders created suspended and moved to
/// pending_review at once. Parallel mode fans out one order per reviewer.
Dispatch dispatch(const GovernDetermination& determination, const std::string& instance_id,
                  const std::string& group_id, const json& payload, Ledger* ledger, std::int64_t now);

/// Moves every armed order past its deadline to timed_out. Returns the ids
/// that timed out.
std::vector<std::string> sla_sweep(std::vector<WorkOrder>& orders, std::int64_t now, Ledger* ledger);

enum class GroupOutcome : std::uint8_t { Pending, Approved, Rejected, TimedOut };
std::string_view to_string(GroupOutcome g) noexcept;

/// Resolution of a fan-out group. quorum 0 means every order must approve.
GroupOutcome group_outcome(const std::vector<WorkOrder>& group, int quorum);

enum class ResumeAction : std::uint8_t { Complete, ReEnter, Terminate };

struct ResumePlan {
  ResumeAction action = ResumeAction::Complete;
  std::string resume_step;
  std::string note;
};

/// Throws IllegalStateTransition when the order is not in a resolvable state.
ResumePlan plan_resume(const WorkOrder& order);

}  // namespace govdec
