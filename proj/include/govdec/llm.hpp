#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "govdec/governance.hpp"
#include "govdec/orchestrator.hpp"
#include "govdec/primitives.hpp"

namespace govdec {

/// Alias, model id, budget and temperature resolved for one call.
struct ModelChoice {
  std::string alias;
  std::string model_id;
  int token_budget = 16384;
  double temperature = 0.2;
};

struct ModelPolicy {
  /// alias -> backend model id
  std::map<std::string, std::string> models = {{"default", "default"}, {"standard", "standard"}};
  std::map<Primitive, std::string> alias;
  std::map<Primitive, int> token_budget;
  std::map<Primitive, double> temperature;
  std::string chooser_alias = "default";
  int retry_limit = 3;

  /// Aliases, budgets and temperatures from the primitive registry.
  static ModelPolicy defaults();
  /// defaults() overlaid with an llm_config.yaml. Throws ConfigError.
  static ModelPolicy load(const std::filesystem::path& path);
  /// LLM_MODEL_DEFAULT / LLM_MODEL_STANDARD override the alias map.
  void apply_environment();

  ModelChoice resolve(Primitive kind) const;
  ModelChoice resolve_chooser() const;
};

enum class CallPurpose : std::uint8_t { Step, Chooser };

struct CompletionRequest {
  CallPurpose purpose = CallPurpose::Step;
  std::string case_id;
  /// Step name for steps; empty for chooser calls.
  std::string step_name;
  /// 1-based attempt for steps, 0-based call index for chooser calls.
  int attempt = 1;
  std::optional<Primitive> kind;
  std::string prompt;
  ModelChoice model;
};

struct Completion {
  std::string text;
  json usage = json::object();
};

/// Single completion contract. Implementations must tolerate concurrent calls.
class Backend {
 public:
  virtual ~Backend() = default;
  virtual std::string name() const = 0;
  virtual Completion complete(const CompletionRequest& request) = 0;
};

/// Canned outputs for one case: per step name an ordered list of raw
/// attempts, plus the chooser replies in call order.
struct TrajectoryScript {
  std::string case_id;
  std::map<std::string, std::vector<std::string>> steps;
  std::vector<std::string> chooser;

  static TrajectoryScript from_json(const json& j);
  json to_json() const;
};

/// Stateless replay: the same (case, step, attempt) key always yields the
/// same text. Unscripted keys throw ScriptExhausted.
class ScriptedBackend : public Backend {
 public:
  ScriptedBackend() = default;
  void add(TrajectoryScript script);
  /// Loads one script file or every *.json file in a directory.
  void load(const std::filesystem::path& path);
  bool has_case(const std::string& case_id) const { return scripts_.count(case_id) > 0; }

  std::string name() const override { return "scripted"; }
  Completion complete(const CompletionRequest& request) override;

 private:
  std::map<std::string, TrajectoryScript> scripts_;
};

struct HttpBackendConfig {
  std::string provider = "openai_compatible";
  /// Base URL, e.g. http://127.0.0.1:8080/v1; /chat/completions is appended.
  std::string endpoint;
  std::string api_key;
  int timeout_seconds = 120;

  /// Reads LLM_PROVIDER, LLM_ENDPOINT and LLM_API_KEY. Throws ConfigError
  /// when the endpoint is missing.
  static HttpBackendConfig from_environment();
};

/// OpenAI-compatible chat-completions client.
class HttpBackend : public Backend {
 public:
  explicit HttpBackend(HttpBackendConfig config);
  std::string name() const override { return config_.provider; }
  Completion complete(const CompletionRequest& request) override;

 private:
  HttpBackendConfig config_;
  std::string scheme_host_port_;
  std::string path_prefix_;
};

struct ExecutionResult {
  std::optional<CognitiveOutput> output;
  std::vector<AttemptRecord> attempts;
  ModelChoice model;
};

/// Calls the backend with the resolved model; on a parse or schema failure
/// re-prompts with the diagnostics appended, up to policy.retry_limit
/// attempts. Never throws for parse failures; output is empty when every
/// attempt failed. ScriptExhausted propagates.
ExecutionResult execute_attempts(Primitive kind, const PromptBundle& bundle, const ModelPolicy& policy,
                                 Backend& backend, const std::string& case_id, const std::string& step_name,
                                 const DomainConfig* domain = nullptr);

/// As execute_attempts, throwing ExhaustedRetries when no attempt parsed.
CognitiveOutput execute(Primitive kind, const PromptBundle& bundle, const ModelPolicy& policy, Backend& backend,
                        const std::string& case_id, const std::string& step_name, const DomainConfig* domain = nullptr);

/// Re-prompt text for attempt n+1.
std::string retry_prompt(const std::string& prompt, const std::string& diagnostics);

/// Orchestrator chooser backed by a model. Replies are parsed with the
/// salvage stages; unparseable replies come back as an empty (illegal) choice.
Chooser make_chooser(Backend& backend, const ModelPolicy& policy, const std::string& case_id);

}  // namespace govdec
