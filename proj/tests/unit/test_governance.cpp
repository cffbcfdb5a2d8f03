#include <doctest.h>

#include "govdec/error.hpp"
#include "govdec/governance.hpp"
#include "support.hpp"

using namespace govdec;

namespace {

StepEpistemicState step(Primitive k, double overall, std::vector<CoherenceFlag> flags = {}, double conf = 0.9) {
  StepEpistemicState s;
  s.step_id = std::string(to_string(k));
  s.kind = k;
  s.confidence = conf;
  s.overall = overall;
  s.flags = std::move(flags);
  bool critical = false;
  for (const auto& f : s.flags) critical = critical || f.severity == Severity::Critical;
  s.warranted = overall >= 0.5 && !critical;
  return s;
}

CognitiveOutput deliberate(const std::string& action) {
  CognitiveOutput o;
  o.kind = Primitive::Deliberate;
  o.payload = {{"recommended_action", action}};
  return o;
}

CognitiveOutput challenge(bool survives) {
  CognitiveOutput o;
  o.kind = Primitive::Challenge;
  o.payload = {{"survives", survives},
               {"vulnerabilities", {{{"description", "gap"}, {"severity", "high"}}}}};
  return o;
}

const DomainConfig& appeal() {
  static const DomainConfig d = load_domain(support::domain_path("appeal"));
  return d;
}

}  // namespace

TEST_SUITE("governance") {

TEST_CASE("apply_tier only raises") {
  auto a = apply_tier(std::nullopt, Tier::Gate, "floor", Tier::Auto, 3);
  CHECK(a.lock.tier == Tier::Gate);
  CHECK(a.lock.locked_at == 3);
  CHECK(a.raised);
  auto b = apply_tier(a.lock, Tier::SpotCheck, "lower", Tier::Auto, 7);
  CHECK(b.lock.tier == Tier::Gate);
  CHECK(b.lowering_noop);
  CHECK(b.lock.rationale == "floor");
  CHECK(b.lock.locked_at == 3);
  auto c = apply_tier(b.lock, Tier::Hold, "guardrail", Tier::Auto, 9);
  CHECK(c.lock.tier == Tier::Hold);
  CHECK(c.lock.rationale == "floor; guardrail");
  auto same = apply_tier(c.lock, Tier::Hold, "again", Tier::Auto, 10);
  CHECK_FALSE(same.raised);
  CHECK_FALSE(same.lowering_noop);
  CHECK(apply_tier(std::nullopt, Tier::Auto, "x", Tier::SpotCheck).lock.tier == Tier::SpotCheck);
}

TEST_CASE("quality gate reads the final successful attempt") {
  QualityGateConfig cfg;
  cfg.confidence_floors = {{Primitive::Deliberate, 0.7}};
  StepAttempts s{"deliberate_1", Primitive::Deliberate, {{1, true, 0.9}, {2, true, 0.6}}};
  auto r = quality_gate({s}, cfg);
  REQUIRE(r.proposal);
  CHECK(*r.proposal == Tier::Gate);
  CHECK(r.breaches.size() == 1);
  s.attempts = {{1, false}, {2, false}, {3, true, 0.7}};
  CHECK_FALSE(quality_gate({s}, cfg).proposal);
  s.attempts = {{1, true, 0.3}, {2, false}};
  CHECK(quality_gate({s}, cfg).proposal);
  StepAttempts other{"classify_1", Primitive::Classify, {{1, true, 0.1}}};
  CHECK_FALSE(quality_gate({other}, cfg).proposal);
}

TEST_CASE("record status") {
  WorkflowEpistemicRecord rec;
  rec.add(step(Primitive::Retrieve, 1.0));
  CHECK(classify_record(rec) == RecordStatus::Supported);
  rec.add(step(Primitive::Classify, 0.65));
  CHECK(classify_record(rec) == RecordStatus::Degraded);
  WorkflowEpistemicRecord warn;
  warn.add(step(Primitive::Classify, 0.9, {CoherenceFlag::make(FlagKind::ConfidenceDrop, "a", "b", "")}));
  CHECK(classify_record(warn) == RecordStatus::Degraded);
  rec.add(step(Primitive::Verify, 0.4));
  CHECK(classify_record(rec) == RecordStatus::Insufficient);
}

TEST_CASE("rubric rule e: spot check for routine decisions") {
  WorkflowEpistemicRecord rec;
  rec.add(step(Primitive::Deliberate, 0.9));
  auto del = deliberate("OVERTURN");
  const auto d = evaluate_govern(rec, {{"deliberate_1", &del}}, appeal());
  CHECK(d.tier_applied == Tier::SpotCheck);
  CHECK(d.rules_fired == std::vector<std::string>{"e"});
  CHECK(d.spot_check_rate == doctest::Approx(0.10));
  CHECK_FALSE(d.work_order);
}

TEST_CASE("rubric rule e: AUTO needs an automatable class and met floors") {
  DomainConfig dom = appeal();
  dom.governance.decision_class = DecisionClass::Automatable;
  WorkflowEpistemicRecord rec;
  rec.add(step(Primitive::Deliberate, 0.9));
  auto del = deliberate("OVERTURN");
  CHECK(evaluate_govern(rec, {{"d", &del}}, dom).tier_applied == Tier::Auto);
  WorkflowEpistemicRecord low;
  low.add(step(Primitive::Deliberate, 0.9, {}, 0.65));
  CHECK(evaluate_govern(low, {{"d", &del}}, dom).tier_applied == Tier::SpotCheck);
}

TEST_CASE("rubric rule d: high-stakes dispositions gate") {
  WorkflowEpistemicRecord rec;
  rec.add(step(Primitive::Deliberate, 0.9));
  auto del = deliberate("REMAND");
  const auto d = evaluate_govern(rec, {{"d", &del}}, appeal());
  CHECK(d.tier_applied == Tier::Gate);
  CHECK(d.rules_fired == std::vector<std::string>{"d"});
  REQUIRE(d.work_order);
  CHECK(d.work_order->sla_hours == 72);
  CHECK(d.work_order->mode == DelegationMode::WaitForResult);
}

TEST_CASE("rubric rule c: repeated failed challenges or warnings") {
  WorkflowEpistemicRecord rec;
  rec.add(step(Primitive::Challenge, 0.9));
  rec.add(step(Primitive::Challenge, 0.9));
  rec.add(step(Primitive::Deliberate, 0.9));
  auto del = deliberate("OVERTURN");
  auto c1 = challenge(false), c2 = challenge(false);
  auto d = evaluate_govern(rec, {{"c1", &c1}, {"c2", &c2}, {"d", &del}}, appeal());
  CHECK(d.tier_applied == Tier::Gate);
  CHECK(d.rules_fired == std::vector<std::string>{"c"});
  CHECK(d.tier_rationale.find("challenge vulnerability noted") != std::string::npos);
  auto c3 = challenge(true);
  d = evaluate_govern(rec, {{"c1", &c1}, {"c2", &c3}, {"d", &del}}, appeal());
  CHECK(d.tier_applied == Tier::SpotCheck);
}

TEST_CASE("rubric rules a and b hold") {
  auto del = deliberate("OVERTURN");
  WorkflowEpistemicRecord rec;
  rec.add(step(Primitive::Deliberate, 0.9));
  rec.critical_guardrail_events = {"force_approve"};
  auto d = evaluate_govern(rec, {{"d", &del}}, appeal());
  CHECK(d.tier_applied == Tier::Hold);
  CHECK(d.rules_fired == std::vector<std::string>{"a"});
  REQUIRE(d.work_order);
  CHECK(d.work_order->sla_hours == 24);

  WorkflowEpistemicRecord bad;
  bad.add(step(Primitive::Deliberate, 0.9, {CoherenceFlag::make(FlagKind::VdTension, "v", "d", "")}));
  d = evaluate_govern(bad, {{"d", &del}}, appeal());
  CHECK(d.tier_applied == Tier::Hold);
  CHECK(d.rules_fired.front() == "b");
  CHECK(d.record_status == RecordStatus::Insufficient);
}

TEST_CASE("govern without deliberate") {
  WorkflowEpistemicRecord rec;
  CHECK_THROWS_AS(evaluate_govern(rec, {}, appeal()), MissingDeliberate);
}

TEST_CASE("domain default raises the floor") {
  DomainConfig dom = appeal();
  dom.governance.default_tier = Tier::Gate;
  WorkflowEpistemicRecord rec;
  rec.add(step(Primitive::Deliberate, 0.9));
  auto del = deliberate("OVERTURN");
  CHECK(evaluate_govern(rec, {{"d", &del}}, dom).tier_applied == Tier::Gate);
}

}
