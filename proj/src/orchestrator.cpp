#include "govdec/orchestrator.hpp"

#include <algorithm>
#include <sstream>

#include "govdec/error.hpp"
#include "govdec/trigger.hpp"

namespace govdec {

namespace {

constexpr std::pair<DecidedBy, std::string_view> kDecidedByNames[] = {
    {DecidedBy::OverridePostGenerate, "override_post_generate"},
    {DecidedBy::OverridePostChallengeSurvived, "override_post_challenge_survived"},
    {DecidedBy::OverridePostGovernTerminate, "override_post_govern_terminate"},
    {DecidedBy::OverrideMaxSteps, "override_max_steps"},
    {DecidedBy::OverrideMaxRepeat, "override_max_repeat"},
    {DecidedBy::OverrideIllegalChoice, "override_illegal_choice"},
    {DecidedBy::OverrideStepFailure, "override_step_failure"},
    {DecidedBy::OverrideReviewerDirective, "override_reviewer_directive"},
    {DecidedBy::DeclaredSequence, "declared_sequence"},
    {DecidedBy::Model, "model"},
};

bool survived(const StepView& s) { return s.payload.value("survives", false); }

int count_kind(const std::vector<StepView>& steps, Primitive k) {
  return static_cast<int>(std::count_if(steps.begin(), steps.end(), [&](const StepView& s) { return s.kind == k; }));
}

const StepView* last_deliberate_before(const std::vector<StepView>& steps, std::size_t end) {
  for (std::size_t i = end; i-- > 0;) {
    if (steps[i].kind == Primitive::Deliberate) return &steps[i];
  }
  return nullptr;
}

bool is_failed_challenge(const StepView& s) { return s.kind == Primitive::Challenge && !survived(s); }

std::string join(const std::vector<Primitive>& ps) {
  std::string out;
  for (auto p : ps) {
    if (!out.empty()) out += ", ";
    out += to_string(p);
  }
  return out;
}

std::string text_of(const json& v) {
  if (v.is_string()) return v.get<std::string>();
  return v.dump();
}

}  // namespace

std::string_view to_string(DecidedBy d) noexcept {
  for (const auto& [k, n] : kDecidedByNames) {
    if (k == d) return n;
  }
  return "model";
}

std::optional<DecidedBy> parse_decided_by(std::string_view s) noexcept {
  for (const auto& [k, n] : kDecidedByNames) {
    if (n == s) return k;
  }
  return std::nullopt;
}

json OrchestratorDecision::to_json() const {
  json legal = json::array();
  for (auto p : legal_set) legal.push_back(std::string(to_string(p)));
  json j = {{"terminate", terminate},
            {"reasoning", reasoning},
            {"decided_by", std::string(to_string(decided_by))},
            {"legal_set", legal},
            {"model_calls", model_calls}};
  if (!terminate) {
    j["chosen"] = std::string(to_string(chosen));
    j["step_name"] = step_name;
    j["params"] = params;
  }
  return j;
}

const LegalTransitionTable& default_transition_table() {
  using P = Primitive;
  static const LegalTransitionTable table = {
      {"start", {P::Retrieve, P::Classify, P::Investigate}},
      {"retrieve", {P::Retrieve, P::Classify, P::Investigate, P::Reflect, P::Verify}},
      {"classify", {P::Retrieve, P::Investigate, P::Verify, P::Reflect}},
      {"investigate", {P::Retrieve, P::Investigate, P::Verify, P::Reflect, P::Deliberate}},
      {"verify", {P::Deliberate, P::Reflect, P::Investigate}},
      {"reflect", {P::Retrieve, P::Investigate, P::Verify, P::Deliberate, P::Govern}},
      {"deliberate", {P::Generate, P::Challenge, P::Reflect}},
      {"challenge", {P::Reflect}},
      {"generate", {P::Challenge}},
      {"govern", {}},
  };
  return table;
}

LegalTransitionTable transition_table_for(const DomainConfig& domain) {
  LegalTransitionTable t = default_transition_table();
  for (const auto& [k, v] : domain.legal_transitions) t[k] = v;
  t["govern"].clear();
  return t;
}

// ---- guard ----------------------------------------------------------------

std::string_view to_string(Trajectory t) noexcept {
  switch (t) {
    case Trajectory::Continue: return "continue";
    case Trajectory::Revise: return "revise";
    case Trajectory::Escalate: return "escalate";
  }
  return "continue";
}

std::optional<Trajectory> parse_trajectory(std::string_view s) noexcept {
  if (s == "continue") return Trajectory::Continue;
  if (s == "revise") return Trajectory::Revise;
  if (s == "escalate") return Trajectory::Escalate;
  return std::nullopt;
}

std::string_view to_string(GuardBasis b) noexcept {
  switch (b) {
    case GuardBasis::GenuineVulnerability: return "genuine_vulnerability";
    case GuardBasis::AuthorityPressure: return "authority_pressure";
    case GuardBasis::DomainMismatch: return "domain_mismatch";
  }
  return "domain_mismatch";
}

json GuardVerdict::to_json() const {
  json j = {{"trajectory", std::string(to_string(trajectory))}, {"scope", scope}};
  j["revision_target"] = revision_target ? json(*revision_target) : json(nullptr);
  j["basis"] = basis ? json(std::string(to_string(*basis))) : json(nullptr);
  return j;
}

GuardVerdict post_challenge_guard(const json& challenge_payload, const json* prior_deliberate_payload,
                                  int unresolved_revisions) {
  if (challenge_payload.value("survives", false)) {
    throw ContractError("post-challenge guard needs a failed challenge");
  }
  if (prior_deliberate_payload == nullptr) throw MissingDeliberate("no determination precedes the challenge");

  GuardVerdict v;
  const json vulns = challenge_payload.value("vulnerabilities", json::array());
  if (vulns.empty()) return v;

  const std::string basis_domain = prior_deliberate_payload->value("basis_domain", std::string());
  std::vector<std::string> scope;
  bool all_authority = true;
  for (const auto& vuln : vulns) {
    const std::string cat = vuln.is_object() ? vuln.value("category", std::string()) : std::string();
    const std::string dom = vuln.is_object() ? vuln.value("domain", std::string()) : std::string();
    if (cat != "authority_pressure") all_authority = false;
    const bool defect = cat == "evidence_gap" || cat == "reasoning_defect";
    const bool in_domain = dom.empty() || basis_domain.empty() || dom == basis_domain;
    if (defect && in_domain) {
      scope.push_back(!dom.empty() ? dom : vuln.value("description", std::string()));
    }
  }

  if (scope.empty()) {
    v.basis = all_authority ? GuardBasis::AuthorityPressure : GuardBasis::DomainMismatch;
    return v;
  }
  v.basis = GuardBasis::GenuineVulnerability;
  for (const auto& s : scope) {
    if (v.scope.find(s) != std::string::npos) continue;
    if (!v.scope.empty()) v.scope += "; ";
    v.scope += s;
  }
  if (unresolved_revisions >= 1) {
    v.trajectory = Trajectory::Escalate;
  } else {
    v.trajectory = Trajectory::Revise;
    v.revision_target = "deliberate_disposition";
  }
  return v;
}

GuardVerdict reconcile_guard(const GuardVerdict& guard, const json& reflect_payload) {
  if (guard.trajectory != Trajectory::Revise) return guard;
  GuardVerdict out = guard;
  auto t = parse_trajectory(reflect_payload.value("trajectory", std::string("revise")));
  out.trajectory = t.value_or(Trajectory::Revise);
  if (out.trajectory == Trajectory::Revise) {
    if (reflect_payload.contains("revision_target") && reflect_payload["revision_target"].is_string()) {
      out.revision_target = reflect_payload["revision_target"].get<std::string>();
    }
  } else {
    out.revision_target.reset();
  }
  return out;
}

json constrained_redeliberate(const GuardVerdict& verdict, const DomainConfig& domain) {
  if (verdict.trajectory != Trajectory::Revise || !verdict.revision_target) {
    throw ContractError("constrained re-deliberation requires a revise verdict, got " +
                        std::string(to_string(verdict.trajectory)));
  }
  json allowed = json::array();
  for (const auto& a : domain.deliberate_vocabulary) allowed.push_back(a);
  return {{"revision_target", *verdict.revision_target},
          {"revision_scope", verdict.scope},
          {"allowed_dispositions", allowed}};
}

// ---- orchestrator ---------------------------------------------------------

Orchestrator::Orchestrator(const WorkflowConfig& workflow, const DomainConfig& domain)
    : workflow_(workflow), domain_(&domain), table_(transition_table_for(domain)) {}

int Orchestrator::unresolved_revisions(const std::vector<StepView>& steps, std::size_t upto) const {
  int count = 0;
  for (std::size_t i = 0; i < upto && i < steps.size(); ++i) {
    const StepView& s = steps[i];
    if (s.kind == Primitive::Challenge && survived(s)) count = 0;
    if (s.kind == Primitive::Reflect && i > 0 && is_failed_challenge(steps[i - 1])) {
      const StepView* d = last_deliberate_before(steps, i - 1);
      if (d == nullptr) continue;
      GuardVerdict g = reconcile_guard(post_challenge_guard(steps[i - 1].payload, &d->payload, count), s.payload);
      if (g.trajectory == Trajectory::Revise) ++count;
    }
  }
  return count;
}

std::optional<GuardVerdict> Orchestrator::pending_guard(const std::vector<StepView>& steps) const {
  if (steps.empty() || !is_failed_challenge(steps.back())) return std::nullopt;
  const StepView* d = last_deliberate_before(steps, steps.size() - 1);
  return post_challenge_guard(steps.back().payload, d ? &d->payload : nullptr,
                              unresolved_revisions(steps, steps.size()));
}

std::optional<GuardVerdict> Orchestrator::effective_guard(const std::vector<StepView>& steps) const {
  const std::size_t n = steps.size();
  if (n < 2 || steps[n - 1].kind != Primitive::Reflect || !is_failed_challenge(steps[n - 2])) return std::nullopt;
  const StepView* d = last_deliberate_before(steps, n - 2);
  GuardVerdict g = post_challenge_guard(steps[n - 2].payload, d ? &d->payload : nullptr,
                                        unresolved_revisions(steps, n - 2));
  return reconcile_guard(g, steps[n - 1].payload);
}

std::string Orchestrator::step_name(Primitive kind, const std::vector<StepView>& steps) const {
  return std::string(to_string(kind)) + "_" + std::to_string(count_kind(steps, kind) + 1);
}

json Orchestrator::step_params(Primitive kind, const std::vector<StepView>& steps) const {
  const StepView* last = steps.empty() ? nullptr : &steps.back();
  switch (kind) {
    case Primitive::Retrieve: {
      if (domain_->knowledge_sources.empty()) return json::object();
      std::set<std::string> done;
      for (const auto& s : steps) {
        if (s.kind != Primitive::Retrieve || !s.params.contains("sources")) continue;
        for (const auto& src : s.params["sources"]) done.insert(text_of(src));
      }
      // Reflect may point retrieval at a specific source.
      if (last && last->kind == Primitive::Reflect) {
        const std::string guidance = last->payload.value("template_guidance", std::string());
        for (const auto& ks : domain_->knowledge_sources) {
          if (!done.count(ks.name) && guidance.find(ks.name) != std::string::npos) {
            return {{"sources", json::array({ks.name})}};
          }
        }
      }
      for (const auto& ks : domain_->knowledge_sources) {
        if (!done.count(ks.name)) return {{"sources", json::array({ks.name})}};
      }
      return {{"sources", json::array({domain_->knowledge_sources.front().name})}};
    }
    case Primitive::Reflect: {
      if (auto g = pending_guard(steps)) {
        return {{"mode", "post_challenge"},
                {"guard_trajectory", std::string(to_string(g->trajectory))},
                {"guard_basis", g->basis ? json(std::string(to_string(*g->basis))) : json(nullptr)},
                {"guard_scope", g->scope}};
      }
      return {{"mode", "gap_filling"}};
    }
    case Primitive::Deliberate: {
      if (auto g = effective_guard(steps); g && g->trajectory == Trajectory::Revise) {
        return constrained_redeliberate(*g, *domain_);
      }
      return json::object();
    }
    case Primitive::Investigate: {
      if (last && last->kind == Primitive::Reflect && last->payload.contains("next_question")) {
        return {{"question", last->payload["next_question"]}};
      }
      return json::object();
    }
    default:
      return json::object();
  }
}

json Orchestrator::params_for(Primitive kind, const std::string& name, const std::vector<StepView>& steps) const {
  for (const auto& ds : workflow_.declared_steps) {
    if (ds.step_name == name && ds.primitive == kind) return ds.params;
  }
  return step_params(kind, steps);
}

std::vector<Primitive> Orchestrator::legal_choices(const std::vector<StepView>& steps) const {
  const auto& c = workflow_.constraints;
  std::set<Primitive> base;
  if (steps.empty()) {
    if (auto it = table_.find("start"); it != table_.end()) base = it->second;
  } else if (auto g = effective_guard(steps)) {
    // A post-challenge reflect settles the route by itself.
    if (g->trajectory == Trajectory::Revise) {
      base = {Primitive::Deliberate};
    } else {
      base = {Primitive::Govern};
    }
  } else if (auto it = table_.find(std::string(to_string(steps.back().kind))); it != table_.end()) {
    base = it->second;
  }

  std::set<Primitive> done;
  for (const auto& s : steps) done.insert(s.kind);
  bool obligations_left = false;
  for (auto p : c.must_include) {
    if (done.count(p)) continue;
    obligations_left = obligations_left || p != Primitive::Govern;
    // A challenge needs a determination to attack.
    if (p == Primitive::Challenge && !done.count(Primitive::Deliberate)) continue;
    base.insert(p);
  }

  std::vector<Primitive> out;
  for (auto p : base) {
    if (!workflow_.available_primitives.empty() && !workflow_.available_primitives.count(p)) continue;
    if (count_kind(steps, p) >= c.repeat_limit(p)) continue;
    if (p == Primitive::Govern && obligations_left) continue;
    // generate forces a challenge and then govern; all three must fit.
    if (p == Primitive::Generate && static_cast<int>(steps.size()) + 3 > c.max_steps) continue;
    out.push_back(p);
  }
  return out;
}

std::string Orchestrator::render_chooser_prompt(const OrchestratorInput& in, const std::vector<Primitive>& legal) const {
  const WorkflowSnapshot& snap = *in.snapshot;
  std::ostringstream ctx;
  ctx << "Case " << snap.case_id << ", " << snap.steps.size() << " steps completed.\n";
  for (std::size_t i = 0; i < snap.steps.size(); ++i) {
    const auto& s = snap.steps[i];
    ctx << "- " << s.step_name << " (" << to_string(s.kind) << ", confidence " << fixed6(s.confidence) << ")";
    if (in.record && i < in.record->steps.size()) {
      const auto& st = in.record->steps[i];
      ctx << " overall " << fixed6(st.overall) << (st.warranted ? "" : " UNWARRANTED");
      for (const auto& f : st.flags) ctx << " [" << to_string(f.kind) << "]";
    }
    ctx << ": " << s.payload.dump() << "\n";
  }
  std::vector<Primitive> avail(workflow_.available_primitives.begin(), workflow_.available_primitives.end());
  std::ostringstream subj;
  subj << "Available primitives: " << join(avail) << "\nLegal next primitives: " << join(legal);
  std::ostringstream rules;
  rules << "Goal: " << workflow_.goal << "\n" << domain_->orchestrator_strategy;
  if (!snap.routing_log.empty()) {
    rules << "\nRouting log:\n";
    for (const auto& r : snap.routing_log) rules << "- " << r << "\n";
  }
  json names = json::array();
  for (auto p : legal) names.push_back(std::string(to_string(p)));
  json schema = {{"type", "object"},
                 {"additionalProperties", false},
                 {"required", {"next_primitive", "reasoning"}},
                 {"properties",
                  {{"next_primitive", {{"type", "string"}, {"enum", names}}}, {"reasoning", {{"type", "string"}}}}}};
  return fill_template(prompt_template("orchestrator"), {{"context", ctx.str()},
                                                         {"subject", subj.str()},
                                                         {"rules", rules.str()},
                                                         {"schema", schema.dump(2)}});
}

OrchestratorDecision Orchestrator::forced(Primitive p, DecidedBy by, std::string why,
                                          const std::vector<StepView>& steps) const {
  OrchestratorDecision d;
  d.chosen = p;
  d.decided_by = by;
  d.reasoning = std::string(to_string(by)) + ": " + why;
  d.step_name = step_name(p, steps);
  d.params = params_for(p, d.step_name, steps);
  d.legal_set = {p};
  return d;
}

OrchestratorDecision Orchestrator::next_declared(const OrchestratorInput& in) const {
  const auto& steps = in.snapshot->steps;
  const auto& c = workflow_.constraints;
  const auto& declared = workflow_.declared_steps;

  std::size_t cursor = 0;
  for (auto it = steps.rbegin(); it != steps.rend(); ++it) {
    auto pos = std::find_if(declared.begin(), declared.end(),
                            [&](const DeclaredStep& d) { return d.step_name == it->step_name; });
    if (pos != declared.end()) {
      cursor = static_cast<std::size_t>(pos - declared.begin()) + 1;
      break;
    }
  }

  std::string skipped;
  for (; cursor < declared.size(); ++cursor) {
    const DeclaredStep& ds = declared[cursor];
    if (ds.transition_condition && in.record && !in.record->steps.empty()) {
      if (!evaluate_gate_trigger(*ds.transition_condition, in.record->steps.back())) {
        skipped += (skipped.empty() ? "" : ", ") + ds.step_name;
        continue;
      }
    }
    if (count_kind(steps, ds.primitive) >= c.repeat_limit(ds.primitive) && ds.primitive != Primitive::Govern) {
      return forced(Primitive::Govern, DecidedBy::OverrideMaxRepeat,
                    std::string(to_string(ds.primitive)) + " reached its repeat limit", steps);
    }
    OrchestratorDecision d;
    d.chosen = ds.primitive;
    d.decided_by = DecidedBy::DeclaredSequence;
    d.step_name = ds.step_name;
    d.params = ds.params;
    d.legal_set = {ds.primitive};
    d.reasoning = "declared step " + std::to_string(cursor + 1) + " of " + std::to_string(declared.size());
    if (!skipped.empty()) d.reasoning += "; skipped " + skipped + " (transition condition false)";
    return d;
  }
  return forced(Primitive::Govern, DecidedBy::DeclaredSequence,
                "declared sequence exhausted" + (skipped.empty() ? std::string() : "; skipped " + skipped), steps);
}

OrchestratorDecision Orchestrator::next_step(const OrchestratorInput& in, const Chooser& chooser) const {
  if (in.snapshot == nullptr) throw ContractError("next_step needs a snapshot");
  const auto& steps = in.snapshot->steps;
  const auto& c = workflow_.constraints;
  const StepView* last = steps.empty() ? nullptr : &steps.back();
  const bool agentic = workflow_.mode == ExecutionMode::Agentic;

  if (agentic && last && last->kind == Primitive::Generate) {
    return forced(Primitive::Challenge, DecidedBy::OverridePostGenerate,
                  "a generated artifact is challenged immediately", steps);
  }
  if (agentic && last && last->kind == Primitive::Challenge && survived(*last)) {
    return forced(Primitive::Govern, DecidedBy::OverridePostChallengeSurvived,
                  "the determination survived challenge", steps);
  }
  if (last && last->kind == Primitive::Govern) {
    if (c.must_end_with != Primitive::Govern) {
      throw ConstraintViolation("trajectory ends with govern but must end with " +
                                std::string(to_string(c.must_end_with)));
    }
    OrchestratorDecision d;
    d.terminate = true;
    d.decided_by = DecidedBy::OverridePostGovernTerminate;
    d.reasoning = "override_post_govern_terminate: govern is terminal";
    return d;
  }
  if (static_cast<int>(steps.size()) >= c.max_steps - 1) {
    if (c.must_end_with != Primitive::Govern) {
      throw ConstraintViolation("max_steps escalation cannot end with " + std::string(to_string(c.must_end_with)));
    }
    return forced(Primitive::Govern, DecidedBy::OverrideMaxSteps,
                  "step " + std::to_string(steps.size() + 1) + " of max " + std::to_string(c.max_steps), steps);
  }
  if (!agentic) return next_declared(in);

  const std::vector<Primitive> legal = legal_choices(steps);
  if (legal.empty()) {
    return forced(Primitive::Govern, DecidedBy::OverrideMaxRepeat, "no legal successor left under repeat limits",
                  steps);
  }

  ChooserRequest req;
  req.legal = legal;
  req.prompt = render_chooser_prompt(in, legal);
  req.call_index = in.chooser_calls;
  int calls = 0;
  for (int attempt = 0; attempt < 2; ++attempt) {
    ChooserReply reply = chooser(req);
    ++calls;
    auto pick = parse_primitive(reply.choice);
    if (pick && std::find(legal.begin(), legal.end(), *pick) != legal.end()) {
      OrchestratorDecision d;
      d.chosen = *pick;
      d.decided_by = DecidedBy::Model;
      d.reasoning = reply.reasoning;
      d.step_name = step_name(*pick, steps);
      d.params = step_params(*pick, steps);
      d.legal_set = legal;
      d.model_calls = calls;
      return d;
    }
    IllegalChoice err(reply.choice);
    req.diagnostics = std::string(err.what()) + "; legal set is {" + join(legal) + "}";
    req.call_index = in.chooser_calls + calls;
  }
  OrchestratorDecision d = forced(Primitive::Govern, DecidedBy::OverrideIllegalChoice,
                                  "illegal choice after one re-ask (" + req.diagnostics.value_or("") + ")", steps);
  d.legal_set = legal;
  d.model_calls = calls;
  return d;
}

}  // namespace govdec
