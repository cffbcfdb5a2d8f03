#include <doctest.h>

#include <set>

#include "govdec/error.hpp"
#include "govdec/hitl.hpp"
#include "govdec/ledger.hpp"
#include "support.hpp"

using namespace govdec;
using S = HitlState;

namespace {

const Actor kReviewer{"rev-1", Role::Reviewer};
const Actor kOperator{"op-1", Role::Operator};

GovernDetermination gated(DelegationMode mode = DelegationMode::WaitForResult, int reviewers = 1) {
  GovernDetermination d;
  d.tier_applied = Tier::Gate;
  d.disposition = "REMAND";
  d.tier_rationale = "high-stakes disposition REMAND";
  WorkOrderSpec w;
  w.mode = mode;
  w.reviewers = reviewers;
  w.sla_hours = 72;
  w.reason = d.tier_rationale;
  d.work_order = w;
  return d;
}

WorkOrder walk_to(S target, Ledger* ledger = nullptr) {
  auto d = dispatch(gated(), "I-1", "I-1-wo1", json::object(), ledger, 1000);
  WorkOrder o = d.orders.at(0);
  if (target == S::PendingReview) return o;
  transition(o, S::Assigned, kReviewer, "", ledger, 1001);
  if (target == S::Assigned) return o;
  transition(o, S::UnderReview, kReviewer, "", ledger, 1002);
  if (target == S::UnderReview) return o;
  transition(o, target, target == S::TimedOut ? Actor::system() : kReviewer, "done", ledger, 1003);
  return o;
}

}  // namespace

TEST_SUITE("hitl") {

TEST_CASE("legal pairs match the table exactly") {
  const std::set<std::pair<S, S>> expected = {
      {S::Suspended, S::PendingReview}, {S::PendingReview, S::Assigned},  {S::PendingReview, S::TimedOut},
      {S::Assigned, S::UnderReview},    {S::Assigned, S::TimedOut},       {S::UnderReview, S::Approved},
      {S::UnderReview, S::Rejected},    {S::UnderReview, S::TimedOut},    {S::Approved, S::Resumed},
      {S::Rejected, S::Terminated},     {S::Rejected, S::Resumed},        {S::TimedOut, S::Terminated},
      {S::TimedOut, S::PendingReview},
  };
  int legal = 0;
  for (S a : kAllHitlStates) {
    for (S b : kAllHitlStates) {
      if (hitl_legal(a, b)) {
        ++legal;
        CHECK(expected.count({a, b}) == 1);
      }
    }
  }
  CHECK(legal == static_cast<int>(hitl_table().size()));
  CHECK(legal == static_cast<int>(expected.size()));
  CHECK(legal == 13);
  for (S s : kAllHitlStates) CHECK(parse_hitl_state(to_string(s)) == s);
}

TEST_CASE("authorization by role") {
  CHECK_NOTHROW(check_authorized(S::Approved, kReviewer));
  CHECK_THROWS_AS(check_authorized(S::Approved, kOperator), UnauthorizedActor);
  CHECK_THROWS_AS(check_authorized(S::Approved, Actor::system()), UnauthorizedActor);
  CHECK_NOTHROW(check_authorized(S::Terminated, kOperator));
  CHECK_THROWS_AS(check_authorized(S::Terminated, kReviewer), UnauthorizedActor);
  CHECK_THROWS_AS(check_authorized(S::Suspended, kOperator), UnauthorizedActor);
}

TEST_CASE("dispatch queues one order and arms the SLA") {
  Ledger ledger;
  ledger.append(EntryType::System, {{"case_id", "x"}});
  const auto d = dispatch(gated(), "I-1", "I-1-wo1", {{"disposition", "REMAND"}}, &ledger, 1000);
  CHECK(d.suspends);
  REQUIRE(d.orders.size() == 1);
  CHECK(d.orders[0].state == S::PendingReview);
  CHECK(d.orders[0].sla_deadline == 1000 + 72 * 3600);
  CHECK(ledger.size() == 3);  // start, work order, transition
  CHECK(ledger.verify().chain_valid);

  GovernDetermination spot;
  spot.tier_applied = Tier::SpotCheck;
  CHECK(dispatch(spot, "I", "g", {}, nullptr, 0).orders.empty());
  CHECK(dispatch(gated(DelegationMode::Parallel, 3), "I", "g", {}, nullptr, 0).orders.size() == 3);
  CHECK_FALSE(dispatch(gated(DelegationMode::FireAndForget), "I", "g", {}, nullptr, 0).suspends);
}

TEST_CASE("illegal or unauthorized moves leave the order and ledger intact") {
  Ledger ledger;
  WorkOrder o = walk_to(S::PendingReview, &ledger);
  const auto before = ledger.size();
  CHECK_THROWS_AS(transition(o, S::Approved, kReviewer, "", &ledger, 1), IllegalStateTransition);
  CHECK_THROWS_AS(transition(o, S::Assigned, kOperator, "", &ledger, 1), UnauthorizedActor);
  CHECK(o.state == S::PendingReview);
  CHECK(ledger.size() == before);
  transition(o, S::Assigned, kReviewer, "mine", &ledger, 5);
  CHECK(o.assignee == "rev-1");
  CHECK(ledger.size() == before + 1);
}

TEST_CASE("sla sweep times out armed orders only") {
  std::vector<WorkOrder> orders = {walk_to(S::PendingReview), walk_to(S::UnderReview), walk_to(S::Approved)};
  CHECK(orders[2].sla_deadline == std::nullopt);
  const std::int64_t deadline = *orders[0].sla_deadline;
  CHECK(sla_sweep(orders, deadline - 1, nullptr).empty());
  const auto fired = sla_sweep(orders, deadline, nullptr);
  CHECK(fired.size() == 2);
  CHECK(orders[0].state == S::TimedOut);
  CHECK(orders[1].state == S::TimedOut);
  CHECK(orders[2].state == S::Approved);
  // re-queue re-arms the timer
  transition(orders[0], S::PendingReview, kOperator, "requeue", nullptr, deadline + 10);
  CHECK(orders[0].sla_deadline == deadline + 10 + 72 * 3600);
}

TEST_CASE("resume plans") {
  CHECK(plan_resume(walk_to(S::Approved)).action == ResumeAction::Complete);
  WorkOrder r = walk_to(S::Rejected);
  CHECK(plan_resume(r).action == ResumeAction::Terminate);
  r.directive = ResumeDirective{"deliberate_1"};
  const auto p = plan_resume(r);
  CHECK(p.action == ResumeAction::ReEnter);
  CHECK(p.resume_step == "deliberate_1");
  CHECK(plan_resume(walk_to(S::TimedOut)).action == ResumeAction::Terminate);
  CHECK_THROWS_AS(plan_resume(walk_to(S::Assigned)), IllegalStateTransition);
}

TEST_CASE("group outcome with quorum") {
  std::vector<WorkOrder> g = {walk_to(S::Approved), walk_to(S::UnderReview), walk_to(S::Rejected)};
  CHECK(group_outcome(g, 1) == GroupOutcome::Approved);
  CHECK(group_outcome(g, 2) == GroupOutcome::Pending);
  CHECK(group_outcome(g, 0) == GroupOutcome::Rejected);
  g[1] = walk_to(S::TimedOut);
  CHECK(group_outcome(g, 2) == GroupOutcome::Rejected);
  std::vector<WorkOrder> slow = {walk_to(S::TimedOut), walk_to(S::Approved)};
  CHECK(group_outcome(slow, 0) == GroupOutcome::TimedOut);
}

TEST_CASE("work orders round-trip through json") {
  WorkOrder o = walk_to(S::Rejected);
  o.directive = ResumeDirective{"investigate_2"};
  const WorkOrder back = WorkOrder::from_json(o.to_json());
  CHECK(back.to_json() == o.to_json());
  CHECK(back.state == S::Rejected);
  REQUIRE(back.directive);
  CHECK(back.directive->resume_step == "investigate_2");
}

}
