#include "govdec/governance.hpp"

#include <algorithm>

#include "govdec/error.hpp"

namespace govdec {

json TierLock::to_json() const {
  return {{"tier", std::string(to_string(tier))}, {"locked_at", locked_at}, {"rationale", rationale}};
}

TierApplication apply_tier(const std::optional<TierLock>& current, Tier proposed, const std::string& rationale,
                           Tier domain_default, std::uint64_t ledger_index) {
  TierApplication r;
  if (current) {
    r.lock = *current;
  } else {
    r.lock.tier = domain_default;
    r.lock.locked_at = ledger_index;
  }
  if (proposed > r.lock.tier) {
    r.lock.tier = proposed;
    r.lock.locked_at = ledger_index;
    if (!rationale.empty()) {
      r.lock.rationale += (r.lock.rationale.empty() ? "" : "; ") + rationale;
    }
    r.raised = true;
  } else if (proposed < r.lock.tier) {
    r.lowering_noop = true;
  }
  return r;
}

json AttemptRecord::to_json() const {
  json j = {{"attempt", attempt}, {"ok", ok}};
  if (confidence) j["confidence"] = fixed6(*confidence);
  if (salvage_stage) j["salvage_stage"] = *salvage_stage;
  if (!diagnostics.empty()) j["diagnostics"] = diagnostics;
  return j;
}

QualityGateResult quality_gate(const std::vector<StepAttempts>& steps, const QualityGateConfig& config) {
  QualityGateResult r;
  for (const auto& s : steps) {
    auto floor = config.confidence_floors.find(s.kind);
    if (floor == config.confidence_floors.end()) continue;
    const AttemptRecord* final_ok = nullptr;
    for (const auto& a : s.attempts) {
      if (a.ok) final_ok = &a;
    }
    // Steps with no successful attempt take the exhausted-retries path.
    if (!final_ok || !final_ok->confidence) continue;
    if (*final_ok->confidence < floor->second) {
      r.breaches.push_back(s.step_id + " confidence " + fixed6(*final_ok->confidence) + " below floor " +
                           fixed6(floor->second));
    }
  }
  if (!r.breaches.empty()) r.proposal = config.escalate_to;
  return r;
}

std::string_view to_string(RecordStatus s) noexcept {
  switch (s) {
    case RecordStatus::Supported: return "SUPPORTED";
    case RecordStatus::Degraded: return "DEGRADED";
    case RecordStatus::Insufficient: return "INSUFFICIENT";
  }
  return "SUPPORTED";
}

RecordStatus classify_record(const WorkflowEpistemicRecord& record) {
  bool degraded = false;
  bool any_flag = false;
  for (const auto& s : record.steps) {
    if (!s.warranted) return RecordStatus::Insufficient;
    for (const auto& f : s.flags) {
      any_flag = true;
      degraded = degraded || f.severity == Severity::Warning;
    }
    degraded = degraded || (s.overall >= 0.5 && s.overall < 0.7);
  }
  if (degraded) return RecordStatus::Degraded;
  // Flags that are neither warnings nor unwarranting cannot exist (critical
  // flags force warranted=false), so a flag here means DEGRADED already.
  return any_flag ? RecordStatus::Degraded : RecordStatus::Supported;
}

json WorkOrderSpec::to_json() const {
  return {{"kind", kind},  {"mode", std::string(to_string(mode))},
          {"sla_hours", sla_hours}, {"reviewers", reviewers},
          {"quorum", quorum}, {"reason", reason}};
}

json GovernDetermination::to_json() const {
  json j = {{"tier_applied", std::string(to_string(tier_applied))},
            {"disposition", disposition},
            {"tier_rationale", tier_rationale},
            {"record_status", std::string(to_string(record_status))},
            {"rules_fired", rules_fired},
            {"spot_check_rate", fixed6(spot_check_rate)}};
  if (work_order) j["work_order"] = work_order->to_json();
  return j;
}

void settle_tier(GovernDetermination& d, Tier tier, const DomainConfig& domain) {
  d.tier_applied = tier;
  d.spot_check_rate = tier == Tier::SpotCheck ? domain.governance.spot_check_rate : 0.0;
  if (suspends(tier)) {
    WorkOrderSpec w;
    w.mode = domain.governance.delegation_mode;
    w.sla_hours = tier == Tier::Hold ? domain.governance.sla_hours_hold : domain.governance.sla_hours_gate;
    w.reviewers = domain.governance.reviewers;
    w.quorum = domain.governance.quorum;
    w.reason = d.tier_rationale;
    d.work_order = w;
  } else {
    d.work_order.reset();
  }
}

GovernDetermination evaluate_govern(const WorkflowEpistemicRecord& record, const std::vector<StepOutputRef>& outputs,
                                    const DomainConfig& domain) {
  const CognitiveOutput* deliberate = nullptr;
  std::vector<const CognitiveOutput*> challenges;
  for (const auto& o : outputs) {
    if (!o.output) continue;
    if (o.output->kind == Primitive::Deliberate) deliberate = o.output;
    if (o.output->kind == Primitive::Challenge) challenges.push_back(o.output);
  }
  if (!deliberate) throw MissingDeliberate("govern requires a deliberate output");

  GovernDetermination d;
  d.disposition = deliberate->payload.at("recommended_action").get<std::string>();
  d.record_status = classify_record(record);
  Tier tier = Tier::Auto;
  std::vector<std::string> reasons;
  auto fire = [&](const char* rule, Tier t, std::string why) {
    d.rules_fired.push_back(rule);
    tier = std::max(tier, t);
    reasons.push_back(std::move(why));
  };

  if (!record.critical_guardrail_events.empty()) {
    std::string ids;
    for (const auto& id : record.critical_guardrail_events) ids += (ids.empty() ? "" : ", ") + id;
    fire("a", Tier::Hold, "critical guardrail event (" + ids + ")");
  }

  bool critical_unwarranted = false;
  for (const auto& s : record.steps) critical_unwarranted = critical_unwarranted || (!s.warranted && s.has_critical_flag());
  if (critical_unwarranted) {
    fire("b", Tier::Hold, "a step is unwarranted due to a critical coherence flag");
  } else if (d.record_status == RecordStatus::Insufficient) {
    fire("b", Tier::Hold, "epistemic record INSUFFICIENT");
  }

  const bool any_survived = std::any_of(challenges.begin(), challenges.end(), [](const CognitiveOutput* c) {
    return c->payload.at("survives").get<bool>();
  });
  bool warning_flags = false;
  for (const auto& s : record.steps) {
    for (const auto& f : s.flags) warning_flags = warning_flags || f.severity == Severity::Warning;
  }
  if (record.challenge_cycle_count >= 2 && !any_survived) {
    fire("c", Tier::Gate, std::to_string(record.challenge_cycle_count) + " challenge cycles without a surviving challenge");
  } else if (warning_flags) {
    fire("c", Tier::Gate, "warning coherence flags present");
  } else if (d.record_status == RecordStatus::Degraded) {
    fire("c", Tier::Gate, "epistemic record DEGRADED");
  }

  if (domain.governance.high_stakes_dispositions.count(d.disposition)) {
    fire("d", Tier::Gate, "high-stakes disposition " + d.disposition);
  }

  if (d.rules_fired.empty()) {
    bool floors_met = true;
    for (const auto& s : record.steps) {
      auto f = domain.governance.confidence_floors.find(s.kind);
      if (f != domain.governance.confidence_floors.end() && s.confidence < f->second) floors_met = false;
    }
    const bool flag_free = std::all_of(record.steps.begin(), record.steps.end(),
                                       [](const StepEpistemicState& s) { return s.flags.empty(); });
    if (domain.governance.decision_class == DecisionClass::Automatable &&
        d.record_status == RecordStatus::Supported && flag_free && floors_met) {
      fire("e", Tier::Auto, "SUPPORTED record, no flags, all floors met");
    } else {
      fire("e", Tier::SpotCheck, "standard decision, quality monitoring");
    }
  }

  for (const CognitiveOutput* c : challenges) {
    for (const auto& v : c->payload.at("vulnerabilities")) {
      const std::string sev = v.value("severity", std::string());
      if (sev == "high" || sev == "critical") {
        reasons.push_back("challenge vulnerability noted for review (" + sev + "): " +
                          v.value("description", std::string()));
      }
    }
  }

  for (const auto& r : reasons) d.tier_rationale += (d.tier_rationale.empty() ? "" : "; ") + r;
  settle_tier(d, std::max(tier, domain.governance.default_tier), domain);
  return d;
}

}  // namespace govdec
