#include "govdec/epistemic.hpp"

#include <algorithm>
#include <set>

#include "govdec/error.hpp"

namespace govdec {

namespace {

constexpr double kEps = 1e-9;

double ratio(std::size_t num, std::size_t den, const char* signal, std::vector<std::string>& notes) {
  if (den == 0) {
    notes.push_back(std::string(signal) + ": zero denominator, scored 0.0");
    return 0.0;
  }
  return quantize6(static_cast<double>(num) / static_cast<double>(den));
}

bool has_data(const json& v) {
  if (v.is_null()) return false;
  if (v.is_string()) return !v.get<std::string>().empty();
  if (v.is_array() || v.is_object()) return !v.empty();
  return true;
}

std::string rule_id(const json& rule) {
  if (rule.is_string()) return rule.get<std::string>();
  if (rule.is_object() && rule.contains("id") && rule["id"].is_string()) return rule["id"].get<std::string>();
  return rule.dump();
}

std::set<std::string> all_citations(const CognitiveOutput& o) {
  std::set<std::string> out(o.citations.begin(), o.citations.end());
  for (const auto& c : o.claims) out.insert(c.citations.begin(), c.citations.end());
  return out;
}

const StepOutputRef* latest_before(const std::vector<StepOutputRef>& outputs, Primitive kind) {
  if (outputs.size() < 2) return nullptr;
  for (std::size_t i = outputs.size() - 1; i-- > 0;) {
    if (outputs[i].output && outputs[i].output->kind == kind) return &outputs[i];
  }
  return nullptr;
}

}  // namespace

std::size_t MechanicalSignals::present() const {
  return static_cast<std::size_t>(evidence_completeness.has_value()) + rule_coverage.has_value() +
         citation_rate.has_value() + alternative_separation.has_value();
}

double MechanicalSignals::mean() const {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& v : {evidence_completeness, rule_coverage, citation_rate, alternative_separation}) {
    if (v) {
      sum += *v;
      ++n;
    }
  }
  return n == 0 ? 0.0 : sum / static_cast<double>(n);
}

json MechanicalSignals::to_json() const {
  json j = json::object();
  if (evidence_completeness) j["evidence_completeness"] = fixed6(*evidence_completeness);
  if (rule_coverage) j["rule_coverage"] = fixed6(*rule_coverage);
  if (citation_rate) j["citation_rate"] = fixed6(*citation_rate);
  if (alternative_separation) j["alternative_separation"] = fixed6(*alternative_separation);
  if (!notes.empty()) j["notes"] = notes;
  return j;
}

std::string_view to_string(FlagKind k) noexcept {
  switch (k) {
    case FlagKind::CdMismatch: return "CD_MISMATCH";
    case FlagKind::VdTension: return "VD_TENSION";
    case FlagKind::ConfidenceDrop: return "CONFIDENCE_DROP";
  }
  return "CONFIDENCE_DROP";
}

std::optional<FlagKind> parse_flag_kind(std::string_view s) noexcept {
  for (FlagKind k : {FlagKind::CdMismatch, FlagKind::VdTension, FlagKind::ConfidenceDrop}) {
    if (to_string(k) == s) return k;
  }
  return std::nullopt;
}

CoherenceFlag CoherenceFlag::make(FlagKind kind, std::string from, std::string to, std::string note) {
  CoherenceFlag f;
  f.kind = kind;
  switch (kind) {
    case FlagKind::CdMismatch:
      f.severity = Severity::Critical;
      f.penalty = -0.20;
      break;
    case FlagKind::VdTension:
      f.severity = Severity::Critical;
      f.penalty = -0.25;
      break;
    case FlagKind::ConfidenceDrop:
      f.severity = Severity::Warning;
      f.penalty = -0.10;
      break;
  }
  f.source_steps = {std::move(from), std::move(to)};
  f.note = std::move(note);
  return f;
}

json CoherenceFlag::to_json() const {
  return {{"kind", std::string(to_string(kind))},
          {"severity", std::string(to_string(severity))},
          {"penalty", fixed6(penalty)},
          {"source_steps", {source_steps.first, source_steps.second}},
          {"note", note}};
}

bool StepEpistemicState::has_flag(FlagKind k) const {
  return std::any_of(flags.begin(), flags.end(), [&](const CoherenceFlag& f) { return f.kind == k; });
}

bool StepEpistemicState::has_critical_flag() const {
  return std::any_of(flags.begin(), flags.end(), [](const CoherenceFlag& f) { return f.severity == Severity::Critical; });
}

json StepEpistemicState::to_json() const {
  json j = {{"step_id", step_id},
            {"primitive", std::string(to_string(kind))},
            {"confidence", fixed6(confidence)},
            {"mechanical", mechanical.to_json()},
            {"overall", fixed6(overall)},
            {"warranted", warranted}};
  if (judgment) {
    j["judgment"] = {{"reasoning_quality", fixed6(judgment->reasoning_quality)},
                     {"outcome_certainty", fixed6(judgment->outcome_certainty)}};
  }
  json flags_json = json::array();
  for (const auto& f : flags) flags_json.push_back(f.to_json());
  j["flags"] = flags_json;
  return j;
}

void WorkflowEpistemicRecord::add(StepEpistemicState state, std::optional<ReflectMode> reflect_mode) {
  if (state.kind == Primitive::Challenge) ++challenge_cycle_count;
  if (state.kind == Primitive::Reflect) {
    if (reflect_mode.value_or(ReflectMode::GapFilling) == ReflectMode::PostChallenge) ++reflect_post_challenge;
    else ++reflect_gap_filling;
  }
  steps.push_back(std::move(state));
}

json WorkflowEpistemicRecord::to_json() const {
  json s = json::array();
  for (const auto& st : steps) s.push_back(st.to_json());
  return {{"steps", s},
          {"challenge_cycle_count", challenge_cycle_count},
          {"reflect_counts", {{"gap_filling", reflect_gap_filling}, {"post_challenge", reflect_post_challenge}}},
          {"critical_guardrail_events", critical_guardrail_events}};
}

MechanicalSignals compute_mechanical(Primitive kind, const CognitiveOutput& output, const json& step_params) {
  MechanicalSignals m;
  const json& p = output.payload;
  switch (kind) {
    case Primitive::Retrieve: {
      std::vector<std::string> specified;
      const json* src = step_params.is_object() && step_params.contains("sources") ? &step_params["sources"] : nullptr;
      if (src && src->is_array()) {
        for (const auto& s : *src) specified.push_back(s.is_string() ? s.get<std::string>() : s.dump());
      } else if (src && src->is_string()) {
        specified.push_back(src->get<std::string>());
      } else {
        for (const auto& s : p.at("sources_queried")) specified.push_back(s.get<std::string>());
      }
      std::size_t with_data = 0;
      const json& data = p.at("data");
      for (const auto& s : specified) {
        auto it = data.find(s);
        if (it != data.end() && has_data(*it)) ++with_data;
      }
      m.evidence_completeness = ratio(with_data, specified.size(), "evidence_completeness", m.notes);
      break;
    }
    case Primitive::Verify: {
      std::set<std::string> applicable;
      if (step_params.is_object() && step_params.contains("rules") && step_params["rules"].is_array()) {
        for (const auto& r : step_params["rules"]) applicable.insert(rule_id(r));
      }
      std::set<std::string> checked;
      for (const auto& r : p.at("rules_checked")) {
        if (applicable.count(r.get<std::string>())) checked.insert(r.get<std::string>());
      }
      m.rule_coverage = ratio(checked.size(), applicable.size(), "rule_coverage", m.notes);
      break;
    }
    default: {
      std::size_t cited = 0;
      for (const auto& c : output.claims) {
        if (!c.citations.empty()) ++cited;
      }
      m.citation_rate = ratio(cited, output.claims.size(), "citation_rate", m.notes);
      if (kind == Primitive::Classify) {
        double best_alt = 0.0;
        for (const auto& a : p.at("alternative_categories")) best_alt = std::max(best_alt, a.at("confidence").get<double>());
        m.alternative_separation = quantize6(std::clamp(output.confidence - best_alt, 0.0, 1.0));
      }
      break;
    }
  }
  return m;
}

std::vector<CoherenceFlag> detect_flags(const WorkflowEpistemicRecord& record, const StepEpistemicState& new_step,
                                        const std::vector<StepOutputRef>& outputs, const DomainConfig* domain) {
  std::vector<CoherenceFlag> flags;
  const CognitiveOutput* current = outputs.empty() ? nullptr : outputs.back().output;

  if (new_step.kind == Primitive::Deliberate && current) {
    const std::string action = current->payload.value("recommended_action", std::string());
    if (const StepOutputRef* cls = latest_before(outputs, Primitive::Classify); cls && domain) {
      const std::string category = cls->output->payload.value("category", std::string());
      auto it = domain->compatibility.find(category);
      if (it != domain->compatibility.end() && !it->second.count(action)) {
        flags.push_back(CoherenceFlag::make(FlagKind::CdMismatch, cls->step_id, new_step.step_id,
                                            "disposition " + action + " is incompatible with category " + category));
      }
    }
    if (const StepOutputRef* ver = latest_before(outputs, Primitive::Verify)) {
      const auto violations = violation_rule_ids(ver->output->payload);
      const double certainty = current->outcome_certainty.value_or(0.0);
      if (!violations.empty() && certainty > kVdCertaintyThreshold + kEps) {
        const auto cited = all_citations(*current);
        const bool addressed = std::any_of(violations.begin(), violations.end(),
                                           [&](const std::string& v) { return cited.count(v) > 0; });
        if (!addressed) {
          flags.push_back(CoherenceFlag::make(FlagKind::VdTension, ver->step_id, new_step.step_id,
                                              "verify reported " + std::to_string(violations.size()) +
                                                  " violation(s); determination proceeds at certainty " +
                                                  fixed6(certainty) + " without citing them"));
        }
      }
    }
  }

  if (!record.steps.empty()) {
    const StepEpistemicState& prev = record.steps.back();
    if (prev.confidence - new_step.confidence > kConfidenceDropThreshold + kEps) {
      flags.push_back(CoherenceFlag::make(FlagKind::ConfidenceDrop, prev.step_id, new_step.step_id,
                                          "confidence fell from " + fixed6(prev.confidence) + " to " +
                                              fixed6(new_step.confidence)));
    }
  }
  return flags;
}

OverallResult compute_overall(const MechanicalSignals& mechanical, const std::optional<JudgmentSignals>& judgment,
                              const std::vector<CoherenceFlag>& flags) {
  const double base = judgment ? 0.6 * mechanical.mean() + 0.4 * judgment->mean() : mechanical.mean();
  double penalty = 0.0;
  bool critical = false;
  for (const auto& f : flags) {
    penalty += f.penalty;
    critical = critical || f.severity == Severity::Critical;
  }
  const double multiplier = std::clamp(1.0 + penalty, 0.0, 1.0);
  const double overall = quantize6(std::clamp(base * multiplier, 0.0, 1.0));
  return {overall, overall >= 0.5 && !critical};
}

StepEpistemicState assess_step(const WorkflowEpistemicRecord& record, const std::string& step_id,
                               const CognitiveOutput& output, const json& step_params,
                               const std::vector<StepOutputRef>& outputs, const DomainConfig* domain) {
  StepEpistemicState s;
  s.step_id = step_id;
  s.kind = output.kind;
  s.confidence = output.confidence;
  s.mechanical = compute_mechanical(output.kind, output, step_params);
  if (has_judgment(output.kind) && output.reasoning_quality && output.outcome_certainty) {
    s.judgment = JudgmentSignals{*output.reasoning_quality, *output.outcome_certainty};
  }
  s.flags = detect_flags(record, s, outputs, domain);
  const auto r = compute_overall(s.mechanical, s.judgment, s.flags);
  s.overall = r.overall;
  s.warranted = r.warranted;
  return s;
}

bool evaluate_gate_trigger(const TriggerExpr& expr, const StepEpistemicState& state) {
  TriggerExpr::Bindings b;
  b.signal = [&](std::string_view name) -> std::optional<double> {
    if (name == "overall") return state.overall;
    if (name == "confidence") return state.confidence;
    if (name == "warranted") return state.warranted ? 1.0 : 0.0;
    if (name == "evidence_completeness") return state.mechanical.evidence_completeness;
    if (name == "rule_coverage") return state.mechanical.rule_coverage;
    if (name == "citation_rate") return state.mechanical.citation_rate;
    if (name == "alternative_separation") return state.mechanical.alternative_separation;
    if (name == "reasoning_quality" && state.judgment) return state.judgment->reasoning_quality;
    if (name == "outcome_certainty" && state.judgment) return state.judgment->outcome_certainty;
    return std::nullopt;
  };
  b.has_flag = [&](std::string_view name) {
    const auto k = parse_flag_kind(name);
    return k && state.has_flag(*k);
  };
  return expr.evaluate(b);
}

bool evaluate_gate_trigger(std::string_view expr, const StepEpistemicState& state) {
  return evaluate_gate_trigger(TriggerExpr::parse(expr), state);
}

}  // namespace govdec
