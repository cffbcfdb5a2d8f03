#include <algorithm>
#include <doctest.h>

#include "govdec/error.hpp"
#include "support.hpp"

using namespace govdec;
using support::run_fixture;
using support::scratch;

namespace {

const Actor kReviewer{"rev-1", Role::Reviewer};

std::vector<std::string> step_names(const Instance& inst) {
  std::vector<std::string> out;
  for (const auto& s : inst.steps()) out.push_back(s.step_name);
  return out;
}

int count_type(const std::vector<LedgerEntry>& es, EntryType t) {
  int n = 0;
  for (const auto& e : es) n += e.entry_type == t;
  return n;
}

/// D001's script extended with a second determination cycle for the
/// reject-and-resume path.
ScriptedBackend& rework_backend() {
  static ScriptedBackend b = [] {
    json j = json::parse(support::read_file(support::kRoot / "fixtures" / "scripts" / "D001.json"));
    j["steps"]["deliberate_2"] = j["steps"]["deliberate_1"];
    j["steps"]["challenge_2"] = j["steps"]["challenge_1"];
    j["steps"]["govern_2"] = j["steps"]["govern_1"];
    j["chooser"].push_back(R"({"next_primitive":"challenge","reasoning":"test the revised determination"})");
    ScriptedBackend s;
    s.add(TrajectoryScript::from_json(j));
    return s;
  }();
  return b;
}

}  // namespace

TEST_SUITE("runtime") {

TEST_CASE("A001 follows the thirteen-step trajectory") {
  auto inst = run_fixture("A001", scratch("a001"));
  CHECK(inst->status() == InstanceStatus::Completed);
  REQUIRE(inst->steps().size() == 13);
  CHECK(inst->steps().back().kind == Primitive::Govern);
  const auto d = inst->determination();
  REQUIRE(d);
  CHECK(d->disposition == "OVERTURN");
  CHECK(d->tier_applied == Tier::SpotCheck);
  CHECK(inst->ledger().verify().chain_valid);
  const auto es = inst->ledger_entries();
  CHECK(count_type(es, EntryType::StepCompleted) == 13);
  CHECK(count_type(es, EntryType::OrchestratorDecision) == 13);
  // every step is preceded by the decision that chose it
  for (const auto& s : inst->steps()) CHECK(s.decision_index < s.ledger_index);
}

TEST_CASE("salvaged and retried steps") {
  auto g005 = run_fixture("G005", scratch("g005"));
  REQUIRE(g005->steps().size() == 16);
  const auto g_steps = g005->steps();
  auto classify = std::find_if(g_steps.begin(), g_steps.end(), [](const StepRecord& s) { return s.step_name == "classify_1"; });
  REQUIRE(classify != g_steps.end());
  REQUIRE(classify->output);
  CHECK(classify->output->salvage_stage > 1);

  auto d003 = run_fixture("D003", scratch("d003"));
  bool retried = false;
  for (const auto& s : d003->steps()) {
    if (s.step_name == "classify_1") retried = s.attempts.size() == 2 && !s.attempts[0].ok && s.attempts[1].ok;
  }
  CHECK(retried);
}

TEST_CASE("guardrail finding holds the coercive appeal only") {
  auto held = run_fixture("G004", scratch("g004"));
  REQUIRE(held->determination());
  CHECK(held->determination()->tier_applied == Tier::Hold);
  CHECK(held->status() == InstanceStatus::Suspended);
  CHECK_FALSE(held->findings().empty());
  CHECK(count_type(held->ledger_entries(), EntryType::GuardrailEvent) >= 1);
  auto clean = run_fixture("G004_clean", scratch("g004c"));
  CHECK(clean->determination()->tier_applied < Tier::Hold);
  CHECK(clean->findings().empty());
}

TEST_CASE("prompts never see the raw member id") {
  auto inst = run_fixture("A001", scratch("redact"));
  CHECK(inst->case_view().dump().find("M20418833") == std::string::npos);
  CHECK_FALSE(inst->redaction_map().empty());
}

TEST_CASE("reopening a finished ledger replays to the same state") {
  const auto dir = scratch("replay");
  std::string head;
  json summary;
  {
    auto inst = run_fixture("B001", dir);
    head = inst->ledger().head_hash();
    summary = inst->summary();
  }
  auto again = support::open_instance("B001", dir, support::fixture_backend());
  CHECK(again->ledger().head_hash() == head);
  CHECK(again->summary() == summary);
  CHECK(again->steps().size() == 18);
  again->run();
  CHECK(again->ledger().head_hash() == head);
}

TEST_CASE("gate approval completes the instance") {
  auto inst = run_fixture("D001", scratch("approve"));
  REQUIRE(inst->status() == InstanceStatus::Suspended);
  REQUIRE(inst->orders().size() == 1);
  CHECK(inst->orders()[0].state == HitlState::PendingReview);
  const auto before = inst->ledger_entries().size();
  CHECK_THROWS_AS(inst->approve(kReviewer, "ok"), IllegalStateTransition);
  CHECK_THROWS_AS(inst->accept({"op", Role::Operator}), UnauthorizedActor);
  CHECK(inst->ledger_entries().size() == before);
  inst->accept(kReviewer);
  inst->approve(kReviewer, "notice defect confirmed");
  CHECK(inst->status() == InstanceStatus::Suspended);
  inst->run();
  CHECK(inst->status() == InstanceStatus::Completed);
  CHECK(inst->orders()[0].state == HitlState::Resumed);
  CHECK(inst->determination()->disposition == "REMAND");
  CHECK(inst->ledger().verify().chain_valid);
}

TEST_CASE("rejection without a resume step terminates") {
  auto inst = run_fixture("D001", scratch("reject"));
  inst->accept(kReviewer);
  inst->reject(kReviewer, "wrong call", "");
  inst->run();
  CHECK(inst->status() == InstanceStatus::Terminated);
  CHECK(inst->orders()[0].state == HitlState::Terminated);
}

TEST_CASE("rejection with a resume step re-enters and suspends again") {
  auto inst = support::open_instance("D001", scratch("rework"), rework_backend());
  inst->run();
  REQUIRE(inst->status() == InstanceStatus::Suspended);
  inst->accept(kReviewer);
  inst->reject(kReviewer, "address the merits too", "deliberate_1");
  inst->run();
  const auto names = step_names(*inst);
  REQUIRE(names.size() >= 16);
  CHECK(names[13] == "deliberate_2");
  CHECK(inst->steps()[13].decision.decided_by == DecidedBy::OverrideReviewerDirective);
  CHECK(inst->steps()[13].decision.reasoning.find("address the merits too") != std::string::npos);
  CHECK(names.back() == "govern_2");
  CHECK(inst->status() == InstanceStatus::Suspended);
  // tiers never fall across cycles
  CHECK(inst->tier_lock().tier == Tier::Gate);
  inst->accept(kReviewer);
  inst->approve(kReviewer, "fine now");
  inst->run();
  CHECK(inst->status() == InstanceStatus::Completed);
}

TEST_CASE("sla timeout then termination") {
  auto inst = run_fixture("D001", scratch("sla"));
  const auto deadline = *inst->orders()[0].sla_deadline;
  CHECK(inst->sweep_sla(deadline - 1).empty());
  CHECK(inst->sweep_sla(deadline).size() == 1);
  CHECK(inst->orders()[0].state == HitlState::TimedOut);
  inst->terminate_timed_out({"op", Role::Operator}, "no reviewer available");
  inst->run();
  CHECK(inst->status() == InstanceStatus::Terminated);
}

TEST_CASE("kill switch halts and release continues to the same outcome") {
  KillSwitchBoard board;
  board.engage(KillScope::Instance, "A001", "incident");
  auto opts = support::deterministic_options();
  opts.kill_switches = &board;
  auto inst = support::open_instance("A001", scratch("kill"), support::fixture_backend(), opts);
  CHECK(inst->run() == InstanceStatus::Halted);
  CHECK(inst->steps().empty());
  board.release(KillScope::Instance, "A001");
  CHECK(inst->release_halt("incident closed") == InstanceStatus::Completed);
  CHECK(inst->determination()->disposition == "OVERTURN");
  CHECK(inst->steps().size() == 13);
}

TEST_CASE("workflow mode runs the declared sequence") {
  auto inst = run_fixture("A001", scratch("wf"), "appeal", "appeal_workflow");
  CHECK(inst->status() == InstanceStatus::Completed);
  const auto names = step_names(*inst);
  REQUIRE_FALSE(names.empty());
  CHECK(names.front() == "gather_record");
  CHECK(names.back() == "route");
  CHECK(inst->chooser_calls() == 0);
}

TEST_CASE("the loan domain runs on the same engine") {
  auto inst = run_fixture("REYES", scratch("loan"), "loan");
  REQUIRE(inst->determination());
  CHECK(inst->determination()->disposition == "PARTIAL");
  CHECK(inst->determination()->tier_applied == Tier::Gate);
}

}
