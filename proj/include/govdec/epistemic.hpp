#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "govdec/config.hpp"
#include "govdec/primitives.hpp"
#include "govdec/trigger.hpp"

namespace govdec {

/// Layer 1: computed from output structure only.
struct MechanicalSignals {
  std::optional<double> evidence_completeness;
  std::optional<double> rule_coverage;
  std::optional<double> citation_rate;
  std::optional<double> alternative_separation;
  /// Set when a signal had a zero denominator and was scored 0.0.
  std::vector<std::string> notes;

  std::size_t present() const;
  double mean() const;
  json to_json() const;
};

/// Layer 2: model-reported, six kinds only.
struct JudgmentSignals {
  double reasoning_quality = 0.0;
  double outcome_certainty = 0.0;

  double mean() const { return (reasoning_quality + outcome_certainty) / 2.0; }
};

enum class FlagKind : std::uint8_t { CdMismatch, VdTension, ConfidenceDrop };

std::string_view to_string(FlagKind k) noexcept;
std::optional<FlagKind> parse_flag_kind(std::string_view s) noexcept;

/// Layer 3: cross-step coherence flag.
struct CoherenceFlag {
  FlagKind kind = FlagKind::ConfidenceDrop;
  Severity severity = Severity::Warning;
  double penalty = 0.0;
  std::pair<std::string, std::string> source_steps;
  std::string note;

  static CoherenceFlag make(FlagKind kind, std::string from, std::string to, std::string note);
  json to_json() const;
};

struct StepEpistemicState {
  std::string step_id;
  Primitive kind = Primitive::Retrieve;
  double confidence = 0.0;
  MechanicalSignals mechanical;
  std::optional<JudgmentSignals> judgment;
  std::vector<CoherenceFlag> flags;
  double overall = 0.0;
  bool warranted = false;

  bool has_flag(FlagKind k) const;
  bool has_critical_flag() const;
  json to_json() const;
};

enum class ReflectMode : std::uint8_t { GapFilling, PostChallenge };

struct WorkflowEpistemicRecord {
  std::vector<StepEpistemicState> steps;
  int challenge_cycle_count = 0;
  int reflect_gap_filling = 0;
  int reflect_post_challenge = 0;
  /// Pattern ids of critical guardrail findings on this instance's input.
  std::vector<std::string> critical_guardrail_events;

  void add(StepEpistemicState state, std::optional<ReflectMode> reflect_mode = std::nullopt);
  json to_json() const;
};

/// A completed step's output as flag detection sees it.
struct StepOutputRef {
  std::string step_id;
  const CognitiveOutput* output;
};

MechanicalSignals compute_mechanical(Primitive kind, const CognitiveOutput& output, const json& step_params);

/// `outputs` holds every step so far in execution order, the new step last.
std::vector<CoherenceFlag> detect_flags(const WorkflowEpistemicRecord& record, const StepEpistemicState& new_step,
                                        const std::vector<StepOutputRef>& outputs, const DomainConfig* domain);

struct OverallResult {
  double overall;
  bool warranted;
};

/// base = mean(mechanical), or 0.6 mean(mechanical) + 0.4 mean(judgment)
/// when judgment is present; overall = base x clamp(1 + sum(penalties), 0, 1);
/// warranted = overall >= 0.5 and no critical flag.
OverallResult compute_overall(const MechanicalSignals& mechanical, const std::optional<JudgmentSignals>& judgment,
                              const std::vector<CoherenceFlag>& flags);

/// Runs all three layers for one completed step.
StepEpistemicState assess_step(const WorkflowEpistemicRecord& record, const std::string& step_id,
                               const CognitiveOutput& output, const json& step_params,
                               const std::vector<StepOutputRef>& outputs, const DomainConfig* domain);

bool evaluate_gate_trigger(const TriggerExpr& expr, const StepEpistemicState& state);
bool evaluate_gate_trigger(std::string_view expr, const StepEpistemicState& state);

inline constexpr double kConfidenceDropThreshold = 0.3;
inline constexpr double kVdCertaintyThreshold = 0.7;

}  // namespace govdec
