#include <doctest.h>

#include "govdec/error.hpp"
#include "govdec/orchestrator.hpp"
#include "support.hpp"

using namespace govdec;

namespace {

struct Fixture {
  DomainConfig domain = load_domain(support::domain_path("appeal"));
  WorkflowConfig workflow = load_workflow(support::workflow_path("appeal"));
};

StepView view(Primitive k, int n, json payload = json::object(), json params = json::object()) {
  StepView v;
  v.kind = k;
  v.step_name = std::string(to_string(k)) + "_" + std::to_string(n);
  v.payload = std::move(payload);
  v.params = std::move(params);
  return v;
}

Chooser always(const std::string& choice, int* calls = nullptr) {
  return [choice, calls](const ChooserRequest&) {
    if (calls) ++*calls;
    return ChooserReply{choice, "because"};
  };
}

OrchestratorDecision next(const Orchestrator& o, const std::vector<StepView>& steps, const Chooser& c) {
  WorkflowSnapshot snap;
  snap.case_id = "T";
  snap.steps = steps;
  WorkflowEpistemicRecord rec;
  return o.next_step({&snap, &rec, 0}, c);
}

const json kDeliberate = {{"recommended_action", "OVERTURN"}, {"basis_domain", "clinical"}};

json failed_challenge(const std::string& category, const std::string& dom = "clinical") {
  return {{"survives", false},
          {"vulnerabilities", {{{"description", "d"}, {"severity", "high"}, {"category", category}, {"domain", dom}}}}};
}

}  // namespace

TEST_SUITE("orchestrator") {

TEST_CASE("default table shape") {
  const auto& t = default_transition_table();
  CHECK(t.at("govern").empty());
  CHECK(t.at("challenge") == std::set<Primitive>{Primitive::Reflect});
  CHECK(t.at("generate") == std::set<Primitive>{Primitive::Challenge});
  CHECK_FALSE(t.at("start").count(Primitive::Govern));
}

TEST_CASE("overrides fire without a chooser call") {
  Fixture f;
  Orchestrator o(f.workflow, f.domain);
  int calls = 0;
  auto c = always("retrieve", &calls);

  auto d = next(o, {view(Primitive::Deliberate, 1, kDeliberate), view(Primitive::Generate, 1)}, c);
  CHECK(d.chosen == Primitive::Challenge);
  CHECK(d.decided_by == DecidedBy::OverridePostGenerate);

  d = next(o, {view(Primitive::Deliberate, 1, kDeliberate), view(Primitive::Challenge, 1, {{"survives", true}})}, c);
  CHECK(d.chosen == Primitive::Govern);
  CHECK(d.decided_by == DecidedBy::OverridePostChallengeSurvived);

  d = next(o, {view(Primitive::Govern, 1)}, c);
  CHECK(d.terminate);

  std::vector<StepView> long_run;
  for (int i = 0; i < f.workflow.constraints.max_steps - 1; ++i) long_run.push_back(view(Primitive::Investigate, i + 1));
  d = next(o, long_run, c);
  CHECK(d.chosen == Primitive::Govern);
  CHECK(d.decided_by == DecidedBy::OverrideMaxSteps);
  CHECK(calls == 0);
}

TEST_CASE("model choices are confined to the legal set") {
  Fixture f;
  Orchestrator o(f.workflow, f.domain);
  auto d = next(o, {}, always("classify"));
  CHECK(d.chosen == Primitive::Classify);
  CHECK(d.step_name == "classify_1");
  CHECK(d.decided_by == DecidedBy::Model);
  CHECK(d.model_calls == 1);

  int calls = 0;
  std::vector<std::optional<std::string>> diags;
  Chooser bad = [&](const ChooserRequest& r) {
    ++calls;
    diags.push_back(r.diagnostics);
    return ChooserReply{"govern", "skip ahead"};
  };
  d = next(o, {}, bad);
  CHECK(calls == 2);
  CHECK_FALSE(diags[0]);
  REQUIRE(diags[1]);
  CHECK(diags[1]->find("legal set") != std::string::npos);
  CHECK(d.decided_by == DecidedBy::OverrideIllegalChoice);
  CHECK(d.chosen == Primitive::Govern);
}

TEST_CASE("govern stays out of reach until obligations are met") {
  Fixture f;
  Orchestrator o(f.workflow, f.domain);
  auto legal = o.legal_choices({view(Primitive::Retrieve, 1), view(Primitive::Reflect, 1)});
  CHECK(std::find(legal.begin(), legal.end(), Primitive::Govern) == legal.end());
  // must_include adds deliberate even where the table would not; challenge
  // waits for a determination to attack
  CHECK(std::find(legal.begin(), legal.end(), Primitive::Deliberate) != legal.end());
  CHECK(std::find(legal.begin(), legal.end(), Primitive::Challenge) == legal.end());
  legal = o.legal_choices({view(Primitive::Retrieve, 1), view(Primitive::Deliberate, 1)});
  CHECK(std::find(legal.begin(), legal.end(), Primitive::Challenge) != legal.end());
  CHECK(std::find(legal.begin(), legal.end(), Primitive::Govern) == legal.end());
}

TEST_CASE("repeat limits prune the legal set") {
  Fixture f;
  Orchestrator o(f.workflow, f.domain);
  std::vector<StepView> steps = {view(Primitive::Retrieve, 1)};
  for (int i = 0; i < 3; ++i) steps.push_back(view(Primitive::Deliberate, i + 1, kDeliberate));
  steps.push_back(view(Primitive::Reflect, 1));
  const auto legal = o.legal_choices(steps);
  CHECK(std::find(legal.begin(), legal.end(), Primitive::Deliberate) == legal.end());
}

TEST_CASE("post-challenge guard") {
  auto g = post_challenge_guard(failed_challenge("evidence_gap"), &kDeliberate, 0);
  CHECK(g.trajectory == Trajectory::Revise);
  CHECK(g.basis == GuardBasis::GenuineVulnerability);
  CHECK(g.revision_target == "deliberate_disposition");
  CHECK(g.scope == "clinical");

  g = post_challenge_guard(failed_challenge("evidence_gap"), &kDeliberate, 1);
  CHECK(g.trajectory == Trajectory::Escalate);

  g = post_challenge_guard(failed_challenge("authority_pressure"), &kDeliberate, 0);
  CHECK(g.trajectory == Trajectory::Continue);
  CHECK(g.basis == GuardBasis::AuthorityPressure);

  g = post_challenge_guard(failed_challenge("reasoning_defect", "legal"), &kDeliberate, 0);
  CHECK(g.trajectory == Trajectory::Continue);
  CHECK(g.basis == GuardBasis::DomainMismatch);

  g = post_challenge_guard({{"survives", false}, {"vulnerabilities", json::array()}}, &kDeliberate, 0);
  CHECK(g.trajectory == Trajectory::Continue);
  CHECK_FALSE(g.basis);

  CHECK_THROWS_AS(post_challenge_guard({{"survives", true}}, &kDeliberate, 0), ContractError);
  CHECK_THROWS_AS(post_challenge_guard(failed_challenge("evidence_gap"), nullptr, 0), MissingDeliberate);
}

TEST_CASE("reflect can overrule a guard revise but not a continue") {
  const auto revise = post_challenge_guard(failed_challenge("evidence_gap"), &kDeliberate, 0);
  CHECK(reconcile_guard(revise, {{"trajectory", "escalate"}}).trajectory == Trajectory::Escalate);
  CHECK(reconcile_guard(revise, {{"trajectory", "revise"}, {"revision_target", "x"}}).revision_target == "x");
  const auto cont = post_challenge_guard(failed_challenge("authority_pressure"), &kDeliberate, 0);
  CHECK(reconcile_guard(cont, {{"trajectory", "revise"}}).trajectory == Trajectory::Continue);
}

TEST_CASE("constrained re-deliberation after a revise reflect") {
  Fixture f;
  Orchestrator o(f.workflow, f.domain);
  std::vector<StepView> steps = {view(Primitive::Retrieve, 1), view(Primitive::Deliberate, 1, kDeliberate),
                                 view(Primitive::Challenge, 1, failed_challenge("evidence_gap"))};
  const json rp = o.step_params(Primitive::Reflect, steps);
  CHECK(rp["mode"] == "post_challenge");
  CHECK(rp["guard_trajectory"] == "revise");
  steps.push_back(view(Primitive::Reflect, 1, {{"trajectory", "revise"}, {"revision_target", "deliberate_disposition"}}));
  CHECK(o.legal_choices(steps) == std::vector<Primitive>{Primitive::Deliberate});
  const json dp = o.step_params(Primitive::Deliberate, steps);
  CHECK(dp["revision_target"] == "deliberate_disposition");
  CHECK(dp["allowed_dispositions"].size() == 4);

  GuardVerdict cont;
  CHECK_THROWS_AS(constrained_redeliberate(cont, f.domain), ContractError);

  // a continue verdict leaves govern as the only route
  std::vector<StepView> pressure = {view(Primitive::Retrieve, 1), view(Primitive::Deliberate, 1, kDeliberate),
                                    view(Primitive::Challenge, 1, failed_challenge("authority_pressure")),
                                    view(Primitive::Reflect, 1, {{"trajectory", "continue"}})};
  CHECK(o.legal_choices(pressure) == std::vector<Primitive>{Primitive::Govern});
}

TEST_CASE("a second revise cycle escalates") {
  Fixture f;
  Orchestrator o(f.workflow, f.domain);
  std::vector<StepView> steps = {
      view(Primitive::Deliberate, 1, kDeliberate),
      view(Primitive::Challenge, 1, failed_challenge("evidence_gap")),
      view(Primitive::Reflect, 1, {{"trajectory", "revise"}, {"revision_target", "deliberate_disposition"}}),
      view(Primitive::Deliberate, 2, kDeliberate),
      view(Primitive::Challenge, 2, failed_challenge("evidence_gap")),
  };
  const auto g = o.pending_guard(steps);
  REQUIRE(g);
  CHECK(g->trajectory == Trajectory::Escalate);
}

TEST_CASE("retrieve walks the knowledge sources") {
  Fixture f;
  Orchestrator o(f.workflow, f.domain);
  CHECK(o.step_params(Primitive::Retrieve, {})["sources"][0] == "clinical_record");
  std::vector<StepView> steps = {view(Primitive::Retrieve, 1, {}, {{"sources", {"clinical_record"}}})};
  CHECK(o.step_params(Primitive::Retrieve, steps)["sources"][0] == "plan_criteria");
  steps.push_back(view(Primitive::Reflect, 1, {{"template_guidance", "check clinical_guidelines next"}}));
  CHECK(o.step_params(Primitive::Retrieve, steps)["sources"][0] == "clinical_guidelines");
}

TEST_CASE("workflow mode follows declared steps and skips on conditions") {
  Fixture f;
  const WorkflowConfig wf = load_workflow(support::workflow_path("appeal_workflow"));
  Orchestrator o(wf, f.domain);
  WorkflowSnapshot snap;
  WorkflowEpistemicRecord rec;
  int calls = 0;
  auto c = always("retrieve", &calls);
  auto d = o.next_step({&snap, &rec, 0}, c);
  CHECK(d.step_name == "gather_record");
  CHECK(d.decided_by == DecidedBy::DeclaredSequence);
  CHECK(d.params["sources"].size() == 2);

  StepView g = view(Primitive::Retrieve, 1);
  g.step_name = "gather_record";
  StepView p = view(Primitive::Classify, 1);
  p.step_name = "presentation";
  snap.steps = {g, p};
  StepEpistemicState low;
  low.confidence = 0.3;
  rec.add(low);
  d = o.next_step({&snap, &rec, 0}, c);
  CHECK(d.step_name == "disposition");
  CHECK(d.reasoning.find("skipped criteria_review") != std::string::npos);
  CHECK(calls == 0);
}

TEST_CASE("must_end_with other than govern is a constraint violation at the end") {
  Fixture f;
  WorkflowConfig wf = f.workflow;
  wf.constraints.must_end_with = Primitive::Generate;
  Orchestrator o(wf, f.domain);
  CHECK_THROWS_AS(next(o, {view(Primitive::Govern, 1)}, always("x")), ConstraintViolation);
}

}
