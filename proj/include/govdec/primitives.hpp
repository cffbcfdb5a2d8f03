#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "govdec/config.hpp"
#include "govdec/types.hpp"

namespace govdec {

using json = nlohmann::json;

struct Claim {
  std::string text;
  std::vector<std::string> citations;
};

/// Typed result of one primitive execution.
struct CognitiveOutput {
  Primitive kind = Primitive::Retrieve;
  /// Per-kind fields only; the shared base-contract fields live below.
  json payload = json::object();
  double confidence = 0.0;
  std::optional<double> reasoning_quality;
  std::optional<double> outcome_certainty;
  std::vector<std::string> citations;
  std::vector<Claim> claims;
  std::string raw_text;
  /// Salvage stage (1-4) that produced the JSON.
  int salvage_stage = 0;

  /// The flat object a model would emit for this output.
  json to_wire() const;
};

/// The kinds whose contract carries reasoning_quality and outcome_certainty.
bool has_judgment(Primitive p) noexcept;

struct Registration {
  Primitive kind;
  std::vector<std::string> required_params;
  json optional_params = json::object();  // name -> default
  std::string template_id;
  std::string model_alias;
  double temperature = 0.2;
  int token_budget = 16384;
};

/// Throws UnknownPrimitive for names outside the vocabulary.
const Registration& registry_lookup(std::string_view kind);
const Registration& registry_lookup(Primitive kind);

/// Merges registry defaults, domain primitive_params and step params (later
/// wins) and checks the registry's required params. Throws MissingParameter.
json resolve_params(Primitive kind, const DomainConfig& domain, const json& step_params);

/// One prior step as prompts see it.
struct StepView {
  std::string step_name;
  Primitive kind = Primitive::Retrieve;
  json payload = json::object();
  double confidence = 0.0;
  json params = json::object();
};

struct WorkflowSnapshot {
  std::string case_id;
  /// Prompt-visible case: redacted, ground truth removed.
  json case_view = json::object();
  std::map<std::string, std::string> documents;
  std::vector<StepView> steps;
  std::vector<std::string> routing_log;
  std::optional<std::string> reviewer_note;
};

struct PromptBundle {
  std::string template_id;
  std::string context;
  std::string subject;
  std::string rules_or_scope;
  std::string output_schema;

  /// The template with all four placeholders substituted.
  std::string text;
};

/// Template bodies by id. Built-in copies are embedded at build time; a
/// directory may override them.
const std::string& prompt_template(const std::string& template_id);
void set_template_directory(const std::optional<std::filesystem::path>& dir);

PromptBundle render_prompt(Primitive kind, const DomainConfig& domain, const WorkflowSnapshot& state,
                           const json& step_params);

/// Single-pass {name} substitution; unknown placeholders are left alone.
std::string fill_template(const std::string& tpl, const std::map<std::string, std::string>& values);

/// JSON-Schema-style text describing a kind's output contract.
std::string output_schema_text(Primitive kind, const DomainConfig* domain = nullptr);

inline constexpr int kSalvageStages = 4;

/// Runs one salvage stage over the raw model text: 1 strict parse, 2 first
/// balanced top-level object, 3 code-fence strip, 4 trailing-comma and raw
/// newline repair. Returns nullopt (with a diagnostic) when the stage does
/// not yield JSON.
std::optional<json> salvage_stage(int stage, std::string_view raw, std::string& diagnostic);

/// Applies the salvage stages in order; the first stage whose JSON passes
/// validate_payload wins. Throws ParseFailure with per-stage diagnostics.
CognitiveOutput parse_output(Primitive kind, std::string_view raw, const DomainConfig* domain = nullptr);

/// Checks the kind's schema and base contract, returning the typed output
/// (raw_text and salvage_stage unset). Throws SchemaViolation or
/// VocabularyViolation.
CognitiveOutput validate_payload(Primitive kind, const json& object, const DomainConfig* domain = nullptr);

/// Helpers over typed payloads.
std::vector<std::string> violation_rule_ids(const json& verify_payload);

}  // namespace govdec
