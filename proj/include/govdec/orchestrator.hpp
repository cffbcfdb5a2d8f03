#pragma once

#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "govdec/config.hpp"
#include "govdec/epistemic.hpp"
#include "govdec/primitives.hpp"

namespace govdec {

enum class DecidedBy : std::uint8_t {
  OverridePostGenerate,
  OverridePostChallengeSurvived,
  OverridePostGovernTerminate,
  OverrideMaxSteps,
  OverrideMaxRepeat,
  OverrideIllegalChoice,
  OverrideStepFailure,
  OverrideReviewerDirective,
  DeclaredSequence,
  Model,
};

std::string_view to_string(DecidedBy d) noexcept;
std::optional<DecidedBy> parse_decided_by(std::string_view s) noexcept;

struct OrchestratorDecision {
  bool terminate = false;
  Primitive chosen = Primitive::Govern;
  std::string step_name;
  std::string reasoning;
  DecidedBy decided_by = DecidedBy::Model;
  json params = json::object();
  std::vector<Primitive> legal_set;
  int model_calls = 0;
  std::uint64_t ledger_index = 0;

  json to_json() const;
};

/// Permitted successors per completed primitive. The key "start" lists
/// the first-step choices; "challenge" applies after a failed challenge.
using LegalTransitionTable = std::map<std::string, std::set<Primitive>>;

const LegalTransitionTable& default_transition_table();
LegalTransitionTable transition_table_for(const DomainConfig& domain);

struct ChooserRequest {
  std::vector<Primitive> legal;
  std::string prompt;
  /// 0-based index of this call within the instance.
  int call_index = 0;
  /// Set on the re-ask after an illegal choice.
  std::optional<std::string> diagnostics;
};

struct ChooserReply {
  std::string choice;
  std::string reasoning;
};

using Chooser = std::function<ChooserReply(const ChooserRequest&)>;

enum class Trajectory : std::uint8_t { Continue, Revise, Escalate };
enum class GuardBasis : std::uint8_t { GenuineVulnerability, AuthorityPressure, DomainMismatch };

std::string_view to_string(Trajectory t) noexcept;
std::optional<Trajectory> parse_trajectory(std::string_view s) noexcept;
std::string_view to_string(GuardBasis b) noexcept;

struct GuardVerdict {
  Trajectory trajectory = Trajectory::Continue;
  std::optional<std::string> revision_target;
  std::optional<GuardBasis> basis;
  /// The epistemic domain a revision is confined to.
  std::string scope;

  json to_json() const;
};

/// Deterministic post-challenge classification. `unresolved_revisions`
/// counts earlier revise cycles not yet followed by a surviving challenge.
/// Throws ContractError when the challenge survived, MissingDeliberate
/// without a prior determination.
GuardVerdict post_challenge_guard(const json& challenge_payload, const json* prior_deliberate_payload,
                                  int unresolved_revisions);

/// Combines the guard with reflect's own trajectory: continue and escalate
/// from the guard stand; a guard revise defers to reflect.
GuardVerdict reconcile_guard(const GuardVerdict& guard, const json& reflect_payload);

/// Step parameters for a constrained second deliberate. Throws
/// ContractError unless the verdict is revise.
json constrained_redeliberate(const GuardVerdict& verdict, const DomainConfig& domain);

/// Everything next_step reads about the instance.
struct OrchestratorInput {
  const WorkflowSnapshot* snapshot = nullptr;
  const WorkflowEpistemicRecord* record = nullptr;
  /// Chooser calls already made by this instance.
  int chooser_calls = 0;
};

class Orchestrator {
 public:
  Orchestrator(const WorkflowConfig& workflow, const DomainConfig& domain);

  /// Returns the next decision (terminate=true for TERMINATE). Overrides are
  /// checked before any chooser call. Throws ConstraintViolation when the
  /// trajectory cannot end with must_end_with.
  OrchestratorDecision next_step(const OrchestratorInput& in, const Chooser& chooser) const;

  /// Effective guard verdict for a reflect that followed a failed challenge
  /// at the end of `steps`, or nullopt when the last step is no such reflect.
  std::optional<GuardVerdict> effective_guard(const std::vector<StepView>& steps) const;

  /// Verdict for the reflect about to run after the failed challenge at the
  /// end of `steps`.
  std::optional<GuardVerdict> pending_guard(const std::vector<StepView>& steps) const;

  /// Agentic-mode parameters for the given kind at this point.
  json step_params(Primitive kind, const std::vector<StepView>& steps) const;

  std::string step_name(Primitive kind, const std::vector<StepView>& steps) const;

  /// Parameters a decision for (kind, step_name) carries: the declared
  /// params in workflow mode, step_params otherwise.
  json params_for(Primitive kind, const std::string& step_name, const std::vector<StepView>& steps) const;

  /// A decision made without the model (overrides, step failure, reviewer
  /// directives).
  OrchestratorDecision forced(Primitive p, DecidedBy by, std::string why, const std::vector<StepView>& steps) const;

  /// Legal set for a model choice after `steps`, overrides aside.
  std::vector<Primitive> legal_choices(const std::vector<StepView>& steps) const;

  std::string render_chooser_prompt(const OrchestratorInput& in, const std::vector<Primitive>& legal) const;

  const WorkflowConfig& workflow() const { return workflow_; }
  const LegalTransitionTable& table() const { return table_; }

 private:
  OrchestratorDecision next_declared(const OrchestratorInput& in) const;
  int unresolved_revisions(const std::vector<StepView>& steps, std::size_t upto) const;

  WorkflowConfig workflow_;
  const DomainConfig* domain_;
  LegalTransitionTable table_;
};

}  // namespace govdec
