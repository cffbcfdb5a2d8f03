#include "govdec/hitl.hpp"

#include <algorithm>

#include "govdec/error.hpp"
#include "govdec/ledger.hpp"

namespace govdec {

namespace {

constexpr std::string_view kStateNames[] = {"suspended", "pending_review", "assigned", "under_review", "approved",
                                            "rejected",  "timed_out",      "resumed",  "terminated"};

std::string deadline_text(const std::optional<std::int64_t>& d) { return d ? iso8601_utc(*d) : std::string(); }

}  // namespace

std::string_view to_string(HitlState s) noexcept { return kStateNames[static_cast<std::size_t>(s)]; }

std::optional<HitlState> parse_hitl_state(std::string_view s) noexcept {
  for (auto st : kAllHitlStates) {
    if (to_string(st) == s) return st;
  }
  return std::nullopt;
}

const std::vector<std::pair<HitlState, HitlState>>& hitl_table() {
  using S = HitlState;
  static const std::vector<std::pair<S, S>> table = {
      {S::Suspended, S::PendingReview}, {S::PendingReview, S::Assigned}, {S::Assigned, S::UnderReview},
      {S::UnderReview, S::Approved},    {S::UnderReview, S::Rejected},   {S::UnderReview, S::TimedOut},
      {S::PendingReview, S::TimedOut},  {S::Assigned, S::TimedOut},      {S::Approved, S::Resumed},
      {S::Rejected, S::Terminated},     {S::Rejected, S::Resumed},       {S::TimedOut, S::Terminated},
      {S::TimedOut, S::PendingReview},
  };
  return table;
}

bool hitl_legal(HitlState from, HitlState to) noexcept {
  const auto& t = hitl_table();
  return std::find(t.begin(), t.end(), std::make_pair(from, to)) != t.end();
}

bool sla_armed(HitlState s) noexcept {
  return s == HitlState::PendingReview || s == HitlState::Assigned || s == HitlState::UnderReview;
}

std::string_view to_string(Role r) noexcept {
  switch (r) {
    case Role::System: return "system";
    case Role::Reviewer: return "reviewer";
    case Role::Operator: return "operator";
  }
  return "system";
}

std::optional<Role> parse_role(std::string_view s) noexcept {
  if (s == "system") return Role::System;
  if (s == "reviewer") return Role::Reviewer;
  if (s == "operator") return Role::Operator;
  return std::nullopt;
}

void check_authorized(HitlState to, const Actor& actor) {
  bool ok = false;
  switch (to) {
    case HitlState::Assigned:
    case HitlState::UnderReview:
    case HitlState::Approved:
    case HitlState::Rejected:
      ok = actor.role == Role::Reviewer;
      break;
    case HitlState::Suspended:
      ok = actor.role == Role::System;
      break;
    case HitlState::PendingReview:
    case HitlState::TimedOut:
    case HitlState::Resumed:
    case HitlState::Terminated:
      ok = actor.role == Role::System || actor.role == Role::Operator;
      break;
  }
  if (!ok) {
    throw UnauthorizedActor("actor '" + actor.id + "' (" + std::string(to_string(actor.role)) +
                            ") may not move an order to " + std::string(to_string(to)));
  }
}

std::string_view to_string(WorkOrderKind k) noexcept {
  return k == WorkOrderKind::HumanReview ? "human_review" : "specialist_workflow";
}

json WorkOrder::to_json() const {
  json j = {{"order_id", order_id},
            {"instance_id", instance_id},
            {"kind", std::string(to_string(kind))},
            {"mode", std::string(to_string(mode))},
            {"group_id", group_id},
            {"payload", payload},
            {"sla_hours", sla_hours},
            {"sla_deadline", sla_deadline ? json(*sla_deadline) : json(nullptr)},
            {"sla_deadline_utc", deadline_text(sla_deadline)},
            {"state", std::string(to_string(state))},
            {"assignee", assignee},
            {"notes", notes}};
  j["directive"] = directive ? json{{"resume_step", directive->resume_step}} : json(nullptr);
  return j;
}

WorkOrder WorkOrder::from_json(const json& j) {
  WorkOrder o;
  o.order_id = j.at("order_id").get<std::string>();
  o.instance_id = j.at("instance_id").get<std::string>();
  o.kind = j.value("kind", std::string("human_review")) == "specialist_workflow" ? WorkOrderKind::SpecialistWorkflow
                                                                                 : WorkOrderKind::HumanReview;
  o.mode = parse_delegation_mode(j.value("mode", std::string("wait_for_result"))).value_or(DelegationMode::WaitForResult);
  o.group_id = j.value("group_id", std::string());
  o.payload = j.value("payload", json::object());
  o.sla_hours = j.value("sla_hours", 72);
  if (j.contains("sla_deadline") && j["sla_deadline"].is_number()) o.sla_deadline = j["sla_deadline"].get<std::int64_t>();
  auto st = parse_hitl_state(j.value("state", std::string()));
  if (!st) throw SerializationError("work order has an unknown state");
  o.state = *st;
  o.assignee = j.value("assignee", std::string());
  o.notes = j.value("notes", std::vector<std::string>{});
  if (j.contains("directive") && j["directive"].is_object()) {
    o.directive = ResumeDirective{j["directive"].value("resume_step", std::string())};
  }
  return o;
}

void transition(WorkOrder& order, HitlState to, const Actor& actor, const std::string& note, Ledger* ledger,
                std::int64_t now) {
  const HitlState from = order.state;
  if (!hitl_legal(from, to)) throw IllegalStateTransition(std::string(to_string(from)), std::string(to_string(to)));
  check_authorized(to, actor);

  WorkOrder next = order;
  next.state = to;
  if (to == HitlState::PendingReview) {
    next.sla_deadline = now + static_cast<std::int64_t>(order.sla_hours) * 3600;
  } else if (!sla_armed(to)) {
    next.sla_deadline.reset();
  }
  if (to == HitlState::Assigned) next.assignee = actor.id;
  if (!note.empty()) next.notes.push_back(note);

  if (ledger) {
    ledger->append(EntryType::HitlTransition, to_canonical_value({{"order_id", order.order_id},
                                               {"instance_id", order.instance_id},
                                               {"from", std::string(to_string(from))},
                                               {"to", std::string(to_string(to))},
                                               {"actor", actor.id},
                                               {"role", std::string(to_string(actor.role))},
                                               {"note", note},
                                               {"sla_deadline", deadline_text(next.sla_deadline)},
                                               {"sla_deadline_epoch", next.sla_deadline ? json(*next.sla_deadline)
                                                                                        : json(nullptr)},
                                               {"resume_step", next.directive ? json(next.directive->resume_step)
                                                                              : json(nullptr)}}));
  }
  order = std::move(next);
}

Dispatch dispatch(const GovernDetermination& determination, const std::string& instance_id,
                  const std::string& group_id, const json& payload, Ledger* ledger, std::int64_t now) {
  Dispatch out;
  if (!suspends(determination.tier_applied) || !determination.work_order) return out;
  const WorkOrderSpec& spec = *determination.work_order;

  const int n = spec.mode == DelegationMode::Parallel ? std::max(1, spec.reviewers) : 1;
  const std::string& group = group_id;
  for (int i = 1; i <= n; ++i) {
    WorkOrder o;
    o.order_id = group + "-" + std::to_string(i);
    o.instance_id = instance_id;
    o.kind = spec.kind == "specialist_workflow" ? WorkOrderKind::SpecialistWorkflow : WorkOrderKind::HumanReview;
    o.mode = spec.mode;
    o.group_id = group;
    o.payload = payload;
    o.sla_hours = spec.sla_hours;
    o.state = HitlState::Suspended;
    if (ledger) {
      json c = o.to_json();
      c["reason"] = spec.reason;
      c["tier"] = std::string(to_string(determination.tier_applied));
      ledger->append(EntryType::WorkOrder, to_canonical_value(c));
    }
    transition(o, HitlState::PendingReview, Actor::system(), "queued for review", ledger, now);
    out.orders.push_back(std::move(o));
  }
  out.suspends = spec.mode != DelegationMode::FireAndForget;
  return out;
}

std::vector<std::string> sla_sweep(std::vector<WorkOrder>& orders, std::int64_t now, Ledger* ledger) {
  std::vector<std::string> fired;
  for (auto& o : orders) {
    if (!sla_armed(o.state) || !o.sla_deadline || now < *o.sla_deadline) continue;
    transition(o, HitlState::TimedOut, Actor::system(), "SLA deadline passed", ledger, now);
    fired.push_back(o.order_id);
  }
  return fired;
}

std::string_view to_string(GroupOutcome g) noexcept {
  switch (g) {
    case GroupOutcome::Pending: return "pending";
    case GroupOutcome::Approved: return "approved";
    case GroupOutcome::Rejected: return "rejected";
    case GroupOutcome::TimedOut: return "timed_out";
  }
  return "pending";
}

GroupOutcome group_outcome(const std::vector<WorkOrder>& group, int quorum) {
  if (group.empty()) return GroupOutcome::Approved;
  const int n = static_cast<int>(group.size());
  const int need = quorum <= 0 ? n : std::min(quorum, n);
  int approved = 0, rejected = 0, timed_out = 0;
  for (const auto& o : group) {
    switch (o.state) {
      case HitlState::Approved:
      case HitlState::Resumed:
        // A rejected order sent back for rework also ends in resumed.
        if (o.directive) {
          ++rejected;
        } else {
          ++approved;
        }
        break;
      case HitlState::Rejected:
      case HitlState::Terminated:
        ++rejected;
        break;
      case HitlState::TimedOut:
        ++timed_out;
        break;
      default:
        break;
    }
  }
  if (approved >= need) return GroupOutcome::Approved;
  const int open = n - approved - rejected - timed_out;
  if (approved + open >= need) return GroupOutcome::Pending;
  return rejected > 0 ? GroupOutcome::Rejected : GroupOutcome::TimedOut;
}

ResumePlan plan_resume(const WorkOrder& order) {
  ResumePlan p;
  p.note = order.notes.empty() ? std::string() : order.notes.back();
  switch (order.state) {
    case HitlState::Approved:
      p.action = ResumeAction::Complete;
      return p;
    case HitlState::Rejected:
      if (order.directive && !order.directive->resume_step.empty()) {
        p.action = ResumeAction::ReEnter;
        p.resume_step = order.directive->resume_step;
      } else {
        p.action = ResumeAction::Terminate;
      }
      return p;
    case HitlState::TimedOut:
      p.action = ResumeAction::Terminate;
      return p;
    default:
      throw IllegalStateTransition(std::string(to_string(order.state)), "resumed");
  }
}

}  // namespace govdec
