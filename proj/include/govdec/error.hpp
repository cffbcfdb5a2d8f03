#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace govdec {

/// Root of every error raised by the library. Each subclass names one
/// contract violation so callers can catch precisely what they handle.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define GOVDEC_DEFINE_ERROR(Name)      \
  class Name : public Error {          \
   public:                             \
    using Error::Error;                \
  }

// kernel
GOVDEC_DEFINE_ERROR(MultipleActive);
GOVDEC_DEFINE_ERROR(UnknownTarget);
GOVDEC_DEFINE_ERROR(IllegalPhase);
GOVDEC_DEFINE_ERROR(StepLimitExceeded);

// primitives
GOVDEC_DEFINE_ERROR(UnknownPrimitive);
GOVDEC_DEFINE_ERROR(VocabularyViolation);

// ledger
GOVDEC_DEFINE_ERROR(SerializationError);
GOVDEC_DEFINE_ERROR(StorageError);

// governance / orchestrator
GOVDEC_DEFINE_ERROR(MissingDeliberate);
GOVDEC_DEFINE_ERROR(ConstraintViolation);
GOVDEC_DEFINE_ERROR(ContractError);

// hitl
GOVDEC_DEFINE_ERROR(UnauthorizedActor);

// config
GOVDEC_DEFINE_ERROR(CaseSchemaError);

// llm
GOVDEC_DEFINE_ERROR(ExhaustedRetries);

// bench
GOVDEC_DEFINE_ERROR(MissingScript);

// service
GOVDEC_DEFINE_ERROR(NotFound);

#undef GOVDEC_DEFINE_ERROR

class MissingParameter : public Error {
 public:
  explicit MissingParameter(std::string param)
      : Error("missing required parameter: " + param), param_(std::move(param)) {}
  const std::string& param() const noexcept { return param_; }

 private:
  std::string param_;
};

class SchemaViolation : public Error {
 public:
  SchemaViolation(std::string field, std::string reason)
      : Error("schema violation at '" + field + "': " + reason),
        field_(std::move(field)),
        reason_(std::move(reason)) {}
  const std::string& field() const noexcept { return field_; }
  const std::string& reason() const noexcept { return reason_; }

 private:
  std::string field_;
  std::string reason_;
};

/// Raised when no salvage stage produced schema-valid JSON. `diagnostics`
/// holds one line per stage that was attempted, in order.
class ParseFailure : public Error {
 public:
  explicit ParseFailure(std::vector<std::string> diagnostics)
      : Error(join(diagnostics)), diagnostics_(std::move(diagnostics)) {}
  const std::vector<std::string>& diagnostics() const noexcept { return diagnostics_; }

 private:
  static std::string join(const std::vector<std::string>& lines) {
    std::string out = "parse failure";
    for (const auto& l : lines) out += "\n  " + l;
    return out;
  }
  std::vector<std::string> diagnostics_;
};

class TriggerParseError : public Error {
 public:
  TriggerParseError(std::size_t token, const std::string& what)
      : Error("trigger parse error at token " + std::to_string(token) + ": " + what),
        token_(token) {}
  std::size_t token() const noexcept { return token_; }

 private:
  std::size_t token_;
};

class ConfigError : public Error {
 public:
  ConfigError(std::string path, const std::string& what)
      : Error("config error at " + path + ": " + what), path_(std::move(path)) {}
  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

class IllegalStateTransition : public Error {
 public:
  IllegalStateTransition(std::string from, std::string to)
      : Error("illegal state transition " + from + " -> " + to),
        from_(std::move(from)),
        to_(std::move(to)) {}
  const std::string& from() const noexcept { return from_; }
  const std::string& to() const noexcept { return to_; }

 private:
  std::string from_;
  std::string to_;
};

class IllegalChoice : public Error {
 public:
  explicit IllegalChoice(std::string choice)
      : Error("orchestrator chose a primitive outside the legal set: " + choice),
        choice_(std::move(choice)) {}
  const std::string& choice() const noexcept { return choice_; }

 private:
  std::string choice_;
};

class ScriptExhausted : public Error {
 public:
  ScriptExhausted(std::string case_id, std::string step)
      : Error("script exhausted for case " + case_id + " at " + step),
        case_id_(std::move(case_id)),
        step_(std::move(step)) {}
  const std::string& case_id() const noexcept { return case_id_; }
  const std::string& step() const noexcept { return step_; }

 private:
  std::string case_id_;
  std::string step_;
};

}  // namespace govdec
