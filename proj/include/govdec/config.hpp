#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "govdec/types.hpp"

namespace govdec {

using json = nlohmann::json;

inline constexpr int kConfigSchemaVersion = 1;

enum class GuardrailCategory : std::uint8_t { PromptInjection, ForceApproval, ClassificationManipulation };
enum class Severity : std::uint8_t { Critical, Warning };

std::string_view to_string(GuardrailCategory c) noexcept;
std::string_view to_string(Severity s) noexcept;

struct GuardrailPattern {
  std::string id;
  GuardrailCategory category = GuardrailCategory::PromptInjection;
  Severity severity = Severity::Warning;
  std::string regex;
};

struct PiiPattern {
  std::string category;
  std::string regex;
};

struct PiiPolicy {
  std::vector<PiiPattern> patterns;
  /// Case field paths (dotted) whose values are redacted wherever they
  /// appear, filed under the given category.
  std::map<std::string, std::string> fields;
};

enum class DecisionClass : std::uint8_t { Routine, Automatable };

enum class DelegationMode : std::uint8_t { FireAndForget, WaitForResult, Parallel };
std::string_view to_string(DelegationMode m) noexcept;
std::optional<DelegationMode> parse_delegation_mode(std::string_view s) noexcept;

struct GovernanceConfig {
  Tier default_tier = Tier::Auto;
  DecisionClass decision_class = DecisionClass::Routine;
  std::map<Primitive, double> confidence_floors;
  Tier escalate_to = Tier::Gate;
  std::set<std::string> high_stakes_dispositions;
  int sla_hours_gate = 72;
  int sla_hours_hold = 24;
  double spot_check_rate = 0.10;
  DelegationMode delegation_mode = DelegationMode::WaitForResult;
  int reviewers = 1;
  /// 0 means every parallel order must resolve.
  int quorum = 0;
};

struct KnowledgeSource {
  std::string name;
  std::string description;
};

struct CaseSchema {
  std::vector<std::string> required;
};

struct DomainConfig {
  std::string domain_id;
  std::string description;
  std::vector<std::string> deliberate_vocabulary;
  bool routing_terms_excluded = true;
  std::string orchestrator_strategy;
  std::vector<KnowledgeSource> knowledge_sources;
  std::map<Primitive, std::string> instructions;
  std::map<Primitive, json> primitive_params;
  GovernanceConfig governance;
  std::vector<GuardrailPattern> guardrails;
  PiiPolicy pii;
  /// classify category -> deliberate actions consistent with it.
  std::map<std::string, std::set<std::string>> compatibility;
  /// Replaces the default legal transition table when non-empty.
  std::map<std::string, std::set<Primitive>> legal_transitions;
  CaseSchema case_schema;

  bool vocabulary_contains(const std::string& term) const;
};

/// Hard trajectory constraints enforced by the engine.
struct TrajectoryConstraints {
  std::set<Primitive> must_include;
  int max_steps = 24;
  Primitive must_end_with = Primitive::Govern;
  std::map<Primitive, int> max_repeat;
  int default_max_repeat = 4;

  int repeat_limit(Primitive p) const;
};

enum class ExecutionMode : std::uint8_t { Workflow, Agentic };
std::string_view to_string(ExecutionMode m) noexcept;

struct DeclaredStep {
  std::string step_name;
  Primitive primitive = Primitive::Retrieve;
  json params = json::object();
  /// Trigger expression over the previous step's epistemic state; the step
  /// is skipped when it evaluates false.
  std::optional<std::string> transition_condition;
};

struct WorkflowConfig {
  std::string workflow_id;
  std::string domain;
  ExecutionMode mode = ExecutionMode::Agentic;
  std::string goal;
  std::vector<DeclaredStep> declared_steps;
  std::set<Primitive> available_primitives;
  TrajectoryConstraints constraints;
};

struct CaseInput {
  std::string case_id;
  /// Full input as submitted.
  json fields = json::object();
  /// What prompts may see: the input with the ground-truth block removed.
  json prompt_view = json::object();
  std::optional<json> ground_truth;
  std::map<std::string, std::string> documents;
};

inline constexpr std::string_view kGroundTruthKey = "ground_truth_complexity";

DomainConfig load_domain(const std::filesystem::path& path);
DomainConfig parse_domain(const std::string& yaml_text);
WorkflowConfig load_workflow(const std::filesystem::path& path);
WorkflowConfig parse_workflow(const std::string& yaml_text);

/// Validates against the domain's case schema when one is given.
CaseInput load_case(const std::filesystem::path& path, const DomainConfig* domain = nullptr);
CaseInput parse_case(const json& body, const DomainConfig* domain = nullptr);

/// Looks up a dotted path ("patient.name") in a JSON object.
const json* find_path(const json& root, std::string_view dotted);

}  // namespace govdec
