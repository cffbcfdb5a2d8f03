#include "govdec/primitives.hpp"

#include <fstream>
#include <mutex>
#include <set>
#include <sstream>

#include "govdec/error.hpp"

namespace govdec {

namespace detail {
const std::map<std::string, std::string>& embedded_templates();
}

namespace {

enum class FT { String, OptString, Bool, Number01, StringArray, ObjectArray, AnyArray, Object, OptObject, Free, Enum, TierName };

struct FieldSpec {
  std::string_view name;
  FT type;
  bool required;
  std::vector<std::string> values = {};
};

const std::vector<FieldSpec>& payload_fields(Primitive p) {
  static const std::map<Primitive, std::vector<FieldSpec>> kSpecs = {
      {Primitive::Retrieve,
       {{"data", FT::Object, true}, {"sources_queried", FT::StringArray, true}, {"retrieval_plan", FT::Free, true}}},
      {Primitive::Classify,
       {{"category", FT::String, true},
        {"alternative_categories", FT::ObjectArray, true},
        {"reasoning", FT::String, true}}},
      {Primitive::Investigate,
       {{"finding", FT::String, true},
        {"hypotheses_tested", FT::AnyArray, true},
        {"evidence_flags", FT::AnyArray, true},
        {"missing_evidence", FT::AnyArray, true}}},
      {Primitive::Verify,
       {{"conforms", FT::Bool, true}, {"violations", FT::AnyArray, true}, {"rules_checked", FT::StringArray, true}}},
      {Primitive::Challenge,
       {{"survives", FT::Bool, true},
        {"vulnerabilities", FT::ObjectArray, true},
        {"strengths", FT::AnyArray, true},
        {"overall_assessment", FT::String, true}}},
      {Primitive::Reflect,
       {{"trajectory", FT::Enum, true, {"continue", "revise", "escalate"}},
        {"revision_target", FT::OptString, false},
        {"what_changed", FT::OptString, false},
        {"open_questions", FT::AnyArray, false},
        {"next_question", FT::OptString, false},
        {"template_guidance", FT::OptString, false},
        {"established_facts_to_skip", FT::AnyArray, false}}},
      {Primitive::Deliberate,
       {{"recommended_action", FT::String, true},
        {"warrant", FT::String, true},
        {"situation_summary", FT::String, true},
        {"options_considered", FT::AnyArray, true},
        {"basis_domain", FT::OptString, false}}},
      {Primitive::Govern,
       {{"tier_applied", FT::TierName, true},
        {"disposition", FT::String, true},
        {"work_order", FT::OptObject, false},
        {"tier_rationale", FT::String, true}}},
      {Primitive::Generate,
       {{"artifact", FT::Free, true}, {"format", FT::String, true}, {"constraints_checked", FT::AnyArray, true}}},
  };
  return kSpecs.at(p);
}

const std::set<std::string> kBaseFields = {"confidence", "reasoning_quality", "outcome_certainty", "citations",
                                           "claims"};
const std::set<std::string> kRoutingTerms = {"GATE", "HOLD", "SPOT_CHECK", "AUTO"};
const std::vector<std::string> kSeverities = {"low", "medium", "high", "critical"};
const std::vector<std::string> kVulnerabilityCategories = {"evidence_gap", "reasoning_defect", "authority_pressure",
                                                           "domain_mismatch", "other"};

double unit_number(const json& v, const std::string& field) {
  if (!v.is_number()) throw SchemaViolation(field, "expected a number in [0,1]");
  const double d = v.get<double>();
  if (!(d >= 0.0 && d <= 1.0)) throw SchemaViolation(field, "value outside [0,1]");
  return quantize6(d);
}

void check_string_array(const json& v, const std::string& field) {
  if (!v.is_array()) throw SchemaViolation(field, "expected a list");
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!v[i].is_string()) throw SchemaViolation(field + "[" + std::to_string(i) + "]", "expected a string");
  }
}

void check_enum(const json& v, const std::string& field, const std::vector<std::string>& values) {
  if (!v.is_string()) throw SchemaViolation(field, "expected a string");
  for (const auto& allowed : values) {
    if (v.get<std::string>() == allowed) return;
  }
  std::string list;
  for (const auto& a : values) list += (list.empty() ? "" : ", ") + a;
  throw SchemaViolation(field, "'" + v.get<std::string>() + "' is not one of {" + list + "}");
}

void check_field(const FieldSpec& spec, const json& v) {
  const std::string name(spec.name);
  switch (spec.type) {
    case FT::String:
      if (!v.is_string()) throw SchemaViolation(name, "expected a string");
      break;
    case FT::OptString:
      if (!v.is_string() && !v.is_null()) throw SchemaViolation(name, "expected a string");
      break;
    case FT::Bool:
      if (!v.is_boolean()) throw SchemaViolation(name, "expected true or false");
      break;
    case FT::Number01:
      unit_number(v, name);
      break;
    case FT::StringArray:
      check_string_array(v, name);
      break;
    case FT::ObjectArray:
      if (!v.is_array()) throw SchemaViolation(name, "expected a list");
      for (std::size_t i = 0; i < v.size(); ++i) {
        if (!v[i].is_object()) throw SchemaViolation(name + "[" + std::to_string(i) + "]", "expected an object");
      }
      break;
    case FT::AnyArray:
      if (!v.is_array()) throw SchemaViolation(name, "expected a list");
      break;
    case FT::Object:
      if (!v.is_object()) throw SchemaViolation(name, "expected an object");
      break;
    case FT::OptObject:
      if (!v.is_object() && !v.is_null()) throw SchemaViolation(name, "expected an object");
      break;
    case FT::Free:
      if (v.is_null()) throw SchemaViolation(name, "must not be null");
      break;
    case FT::Enum:
      check_enum(v, name, spec.values);
      break;
    case FT::TierName:
      if (!v.is_string() || !parse_tier(v.get<std::string>())) {
        throw SchemaViolation(name, "expected AUTO, SPOT_CHECK, GATE or HOLD");
      }
      break;
  }
}

void check_kind_specifics(Primitive kind, const json& o, const DomainConfig* domain) {
  switch (kind) {
    case Primitive::Classify: {
      const json& alts = o.at("alternative_categories");
      for (std::size_t i = 0; i < alts.size(); ++i) {
        const std::string at = "alternative_categories[" + std::to_string(i) + "]";
        if (!alts[i].contains("category") || !alts[i]["category"].is_string()) {
          throw SchemaViolation(at + ".category", "expected a string");
        }
        if (!alts[i].contains("confidence")) throw SchemaViolation(at + ".confidence", "required");
        unit_number(alts[i]["confidence"], at + ".confidence");
      }
      break;
    }
    case Primitive::Verify: {
      const json& v = o.at("violations");
      for (std::size_t i = 0; i < v.size(); ++i) {
        const std::string at = "violations[" + std::to_string(i) + "]";
        if (v[i].is_string()) continue;
        if (!v[i].is_object() || !v[i].contains("rule") || !v[i]["rule"].is_string()) {
          throw SchemaViolation(at, "expected a rule id or an object with a rule field");
        }
      }
      break;
    }
    case Primitive::Challenge: {
      const json& v = o.at("vulnerabilities");
      for (std::size_t i = 0; i < v.size(); ++i) {
        const std::string at = "vulnerabilities[" + std::to_string(i) + "]";
        if (!v[i].contains("description") || !v[i]["description"].is_string()) {
          throw SchemaViolation(at + ".description", "expected a string");
        }
        if (!v[i].contains("severity")) throw SchemaViolation(at + ".severity", "required");
        check_enum(v[i]["severity"], at + ".severity", kSeverities);
        if (v[i].contains("category")) check_enum(v[i]["category"], at + ".category", kVulnerabilityCategories);
        if (v[i].contains("domain") && !v[i]["domain"].is_string()) {
          throw SchemaViolation(at + ".domain", "expected a string");
        }
      }
      break;
    }
    case Primitive::Reflect: {
      if (o.at("trajectory") == "revise") {
        auto it = o.find("revision_target");
        if (it == o.end() || !it->is_string() || it->get<std::string>().empty()) {
          throw SchemaViolation("revision_target", "required when trajectory is revise");
        }
      }
      break;
    }
    case Primitive::Deliberate: {
      const std::string action = o.at("recommended_action").get<std::string>();
      if (domain) {
        if (domain->routing_terms_excluded && kRoutingTerms.count(action)) {
          throw VocabularyViolation("recommended_action '" + action +
                                    "' names a governance tier, not a disposition, in domain " +
                                    domain->domain_id);
        }
        if (!domain->vocabulary_contains(action)) {
          throw SchemaViolation("recommended_action", "'" + action + "' is not in the " + domain->domain_id +
                                                          " vocabulary");
        }
      }
      break;
    }
    default:
      break;
  }
}

std::mutex& template_mutex() {
  static std::mutex m;
  return m;
}
std::optional<std::filesystem::path>& template_dir() {
  static std::optional<std::filesystem::path> d;
  return d;
}
std::map<std::string, std::string>& template_cache() {
  static std::map<std::string, std::string> c;
  return c;
}

std::string substitute(const std::string& tpl, const std::map<std::string, std::string>& values) {
  std::string out;
  out.reserve(tpl.size() + 1024);
  std::size_t i = 0;
  while (i < tpl.size()) {
    if (tpl[i] == '{') {
      const std::size_t close = tpl.find('}', i);
      if (close != std::string::npos) {
        auto it = values.find(tpl.substr(i + 1, close - i - 1));
        if (it != values.end()) {
          out += it->second;
          i = close + 1;
          continue;
        }
      }
    }
    out += tpl[i++];
  }
  return out;
}

std::string summarize_step(const StepView& s) {
  return s.step_name + " (" + std::string(to_string(s.kind)) + ", confidence " + fixed6(s.confidence) +
         "): " + s.payload.dump();
}

const StepView* last_of(const WorkflowSnapshot& state, Primitive kind) {
  for (auto it = state.steps.rbegin(); it != state.steps.rend(); ++it) {
    if (it->kind == kind) return &*it;
  }
  return nullptr;
}

std::string join_strings(const json& arr) {
  std::string out;
  if (!arr.is_array()) return arr.is_string() ? arr.get<std::string>() : arr.dump();
  for (const auto& v : arr) {
    if (!out.empty()) out += ", ";
    out += v.is_string() ? v.get<std::string>() : v.dump();
  }
  return out;
}

std::string render_context(Primitive kind, const WorkflowSnapshot& state) {
  std::ostringstream ss;
  if (kind == Primitive::Reflect) {
    // Reflect reasons about the reasoning: accumulated step outputs only.
    ss << "Accumulated reasoning state (" << state.steps.size() << " steps):\n";
    for (const auto& s : state.steps) ss << "- " << summarize_step(s) << "\n";
  } else {
    ss << "Case " << state.case_id << ":\n" << state.case_view.dump(2) << "\n";
    if (!state.steps.empty()) {
      ss << "\nPrior steps:\n";
      for (const auto& s : state.steps) ss << "- " << summarize_step(s) << "\n";
    }
  }
  if (!state.routing_log.empty()) {
    ss << "\nRouting log:\n";
    for (const auto& r : state.routing_log) ss << "- " << r << "\n";
  }
  if (state.reviewer_note) ss << "\nReviewer note: " << *state.reviewer_note << "\n";
  return ss.str();
}

std::string render_subject(Primitive kind, const WorkflowSnapshot& state, const json& params) {
  std::ostringstream ss;
  switch (kind) {
    case Primitive::Retrieve:
      ss << "Retrieve and summarize these sources: " << join_strings(params.at("sources")) << "\n";
      for (const auto& src : params.at("sources")) {
        const std::string name = src.is_string() ? src.get<std::string>() : src.dump();
        auto it = state.documents.find(name);
        ss << "\n[" << name << "]\n" << (it == state.documents.end() ? "(no document supplied)" : it->second) << "\n";
      }
      break;
    case Primitive::Classify:
      ss << "Assign exactly one category from: " << join_strings(params.at("categories")) << ".";
      break;
    case Primitive::Investigate:
      ss << "Investigate: " << join_strings(params.at("scope"));
      if (params.contains("question")) ss << "\nQuestion: " << join_strings(params["question"]);
      break;
    case Primitive::Verify:
      ss << "Check each rule independently:\n";
      for (const auto& r : params.at("rules")) ss << "- " << (r.is_string() ? r.get<std::string>() : r.dump()) << "\n";
      break;
    case Primitive::Challenge: {
      ss << "Perspective: " << join_strings(params.at("perspective"))
         << "\nThreat model: " << join_strings(params.value("threat_model", json("")));
      if (const StepView* d = last_of(state, Primitive::Deliberate)) {
        ss << "\nDetermination under challenge: " << d->payload.dump();
      }
      break;
    }
    case Primitive::Reflect: {
      ss << "Mode: " << params.value("mode", std::string("gap_filling"));
      if (const StepView* c = last_of(state, Primitive::Challenge)) ss << "\nLatest challenge: " << c->payload.dump();
      if (const StepView* d = last_of(state, Primitive::Deliberate)) ss << "\nLatest determination: " << d->payload.dump();
      break;
    }
    case Primitive::Deliberate:
      ss << "Reach a warranted determination for case " << state.case_id << ".";
      if (params.contains("revision_scope")) {
        ss << "\nRevision scope (revise only within it): " << join_strings(params["revision_scope"]);
      }
      if (params.contains("revision_target")) ss << "\nRevision target: " << join_strings(params["revision_target"]);
      break;
    case Primitive::Govern:
      ss << "Produce the governance determination for case " << state.case_id << ".";
      if (const StepView* d = last_of(state, Primitive::Deliberate)) ss << "\nDetermination: " << d->payload.dump();
      break;
    case Primitive::Generate:
      ss << "Render the determination as: " << join_strings(params.value("format", json("report")));
      if (const StepView* d = last_of(state, Primitive::Deliberate)) ss << "\nDetermination: " << d->payload.dump();
      break;
  }
  return ss.str();
}

std::string render_rules(Primitive kind, const DomainConfig& domain, const json& params) {
  std::ostringstream ss;
  if (auto it = domain.instructions.find(kind); it != domain.instructions.end()) ss << it->second;
  if (kind == Primitive::Deliberate) {
    ss << "\nValid dispositions: ";
    for (std::size_t i = 0; i < domain.deliberate_vocabulary.size(); ++i) {
      ss << (i ? ", " : "") << domain.deliberate_vocabulary[i];
    }
    ss << ".";
    if (domain.routing_terms_excluded) {
      ss << " GATE, HOLD and SPOT_CHECK are review tiers, not dispositions; never output them.";
    }
  }
  ss << "\nParameters: " << params.dump();
  return ss.str();
}

json field_schema(const FieldSpec& f, Primitive kind, const DomainConfig* domain) {
  json s;
  switch (f.type) {
    case FT::String: s = {{"type", "string"}}; break;
    case FT::OptString: s = {{"type", json::array({"string", "null"})}}; break;
    case FT::Bool: s = {{"type", "boolean"}}; break;
    case FT::Number01: s = {{"type", "number"}, {"minimum", 0}, {"maximum", 1}}; break;
    case FT::StringArray: s = {{"type", "array"}, {"items", {{"type", "string"}}}}; break;
    case FT::ObjectArray: s = {{"type", "array"}, {"items", {{"type", "object"}}}}; break;
    case FT::AnyArray: s = {{"type", "array"}}; break;
    case FT::Object: s = {{"type", "object"}}; break;
    case FT::OptObject: s = {{"type", json::array({"object", "null"})}}; break;
    case FT::Free: s = json::object(); break;
    case FT::Enum: s = {{"type", "string"}, {"enum", f.values}}; break;
    case FT::TierName: s = {{"type", "string"}, {"enum", {"AUTO", "SPOT_CHECK", "GATE", "HOLD"}}}; break;
  }
  if (kind == Primitive::Deliberate && f.name == "recommended_action" && domain) {
    s["enum"] = domain->deliberate_vocabulary;
  }
  if (kind == Primitive::Challenge && f.name == "vulnerabilities") {
    s["items"] = {{"type", "object"},
                  {"required", {"description", "severity"}},
                  {"properties",
                   {{"description", {{"type", "string"}}},
                    {"severity", {{"type", "string"}, {"enum", kSeverities}}},
                    {"category", {{"type", "string"}, {"enum", kVulnerabilityCategories}}},
                    {"domain", {{"type", "string"}}}}}};
  }
  if (kind == Primitive::Classify && f.name == "alternative_categories") {
    s["items"] = {{"type", "object"},
                  {"required", {"category", "confidence"}},
                  {"properties", {{"category", {{"type", "string"}}}, {"confidence", {{"type", "number"}}}}}};
  }
  return s;
}

}  // namespace

bool has_judgment(Primitive p) noexcept {
  switch (p) {
    case Primitive::Classify:
    case Primitive::Investigate:
    case Primitive::Verify:
    case Primitive::Challenge:
    case Primitive::Deliberate:
    case Primitive::Generate:
      return true;
    default:
      return false;
  }
}

json CognitiveOutput::to_wire() const {
  json o = payload;
  o["confidence"] = confidence;
  if (reasoning_quality) o["reasoning_quality"] = *reasoning_quality;
  if (outcome_certainty) o["outcome_certainty"] = *outcome_certainty;
  if (!citations.empty()) o["citations"] = citations;
  if (!claims.empty()) {
    json arr = json::array();
    for (const auto& c : claims) arr.push_back({{"text", c.text}, {"citations", c.citations}});
    o["claims"] = arr;
  }
  return o;
}

const Registration& registry_lookup(Primitive kind) {
  static const std::map<Primitive, Registration> kRegistry = [] {
    std::map<Primitive, Registration> r;
    auto add = [&](Primitive p, std::vector<std::string> required, json optional, std::string alias) {
      Registration reg;
      reg.kind = p;
      reg.required_params = std::move(required);
      reg.template_id = std::string(to_string(p));
      reg.model_alias = std::move(alias);
      reg.temperature = p == Primitive::Classify ? 0.0 : 0.2;
      optional["temperature"] = reg.temperature;
      reg.optional_params = std::move(optional);
      r.emplace(p, std::move(reg));
    };
    add(Primitive::Retrieve, {"sources"}, json::object(), "default");
    add(Primitive::Classify, {"categories"}, json::object(), "standard");
    add(Primitive::Investigate, {"scope"}, json::object(), "default");
    add(Primitive::Verify, {"rules"}, json::object(), "standard");
    add(Primitive::Challenge, {"perspective"}, {{"threat_model", "the strongest opposing reading of the record"}},
        "standard");
    add(Primitive::Reflect, {}, {{"mode", "gap_filling"}}, "standard");
    add(Primitive::Deliberate, {}, json::object(), "default");
    add(Primitive::Govern, {}, json::object(), "default");
    add(Primitive::Generate, {}, {{"format", "determination_notice"}}, "default");
    return r;
  }();
  return kRegistry.at(kind);
}

const Registration& registry_lookup(std::string_view kind) { return registry_lookup(primitive_from_string(kind)); }

json resolve_params(Primitive kind, const DomainConfig& domain, const json& step_params) {
  const Registration& reg = registry_lookup(kind);
  json params = reg.optional_params;
  if (auto it = domain.primitive_params.find(kind); it != domain.primitive_params.end()) {
    for (const auto& [k, v] : it->second.items()) params[k] = v;
  }
  if (step_params.is_object()) {
    for (const auto& [k, v] : step_params.items()) params[k] = v;
  }
  for (const auto& name : reg.required_params) {
    if (!params.contains(name) || params[name].is_null()) throw MissingParameter(name);
  }
  return params;
}

std::string fill_template(const std::string& tpl, const std::map<std::string, std::string>& values) {
  return substitute(tpl, values);
}

const std::string& prompt_template(const std::string& template_id) {
  std::lock_guard lock(template_mutex());
  auto& cache = template_cache();
  if (auto it = cache.find(template_id); it != cache.end()) return it->second;
  if (template_dir()) {
    const auto path = *template_dir() / (template_id + ".txt");
    std::ifstream in(path, std::ios::binary);
    if (in) {
      std::ostringstream ss;
      ss << in.rdbuf();
      return cache.emplace(template_id, ss.str()).first->second;
    }
  }
  const auto& embedded = detail::embedded_templates();
  auto it = embedded.find(template_id);
  if (it == embedded.end()) throw Error("no prompt template named " + template_id);
  return cache.emplace(template_id, it->second).first->second;
}

void set_template_directory(const std::optional<std::filesystem::path>& dir) {
  std::lock_guard lock(template_mutex());
  template_dir() = dir;
  template_cache().clear();
}

std::string output_schema_text(Primitive kind, const DomainConfig* domain) {
  json schema = {{"type", "object"}, {"additionalProperties", false}};
  json props = json::object();
  json required = json::array();
  for (const auto& f : payload_fields(kind)) {
    props[std::string(f.name)] = field_schema(f, kind, domain);
    if (f.required) required.push_back(std::string(f.name));
  }
  const json unit = {{"type", "number"}, {"minimum", 0}, {"maximum", 1}};
  props["confidence"] = unit;
  required.push_back("confidence");
  if (has_judgment(kind)) {
    props["reasoning_quality"] = unit;
    props["outcome_certainty"] = unit;
    required.push_back("reasoning_quality");
    required.push_back("outcome_certainty");
  }
  props["citations"] = {{"type", "array"}, {"items", {{"type", "string"}}}};
  props["claims"] = {{"type", "array"},
                     {"items",
                      {{"type", "object"},
                       {"required", {"text", "citations"}},
                       {"properties",
                        {{"text", {{"type", "string"}}},
                         {"citations", {{"type", "array"}, {"items", {{"type", "string"}}}}}}}}}};
  schema["properties"] = props;
  schema["required"] = required;
  return schema.dump(2);
}

PromptBundle render_prompt(Primitive kind, const DomainConfig& domain, const WorkflowSnapshot& state,
                           const json& step_params) {
  const Registration& reg = registry_lookup(kind);
  const json params = resolve_params(kind, domain, step_params);
  PromptBundle b;
  b.template_id = reg.template_id;
  b.context = render_context(kind, state);
  b.subject = render_subject(kind, state, params);
  b.rules_or_scope = render_rules(kind, domain, params);
  b.output_schema = output_schema_text(kind, &domain);
  b.text = substitute(prompt_template(reg.template_id), {{"context", b.context},
                                                         {"subject", b.subject},
                                                         {"rules", b.rules_or_scope},
                                                         {"schema", b.output_schema}});
  return b;
}

CognitiveOutput validate_payload(Primitive kind, const json& object, const DomainConfig* domain) {
  if (!object.is_object()) throw SchemaViolation("$", "expected a JSON object");
  const auto& specs = payload_fields(kind);
  for (const auto& [key, value] : object.items()) {
    bool known = kBaseFields.count(key) > 0;
    for (const auto& f : specs) known = known || f.name == key;
    if (!known) throw SchemaViolation(key, "not part of the " + std::string(to_string(kind)) + " contract");
  }
  CognitiveOutput out;
  out.kind = kind;
  for (const auto& f : specs) {
    auto it = object.find(std::string(f.name));
    if (it == object.end()) {
      if (f.required) throw SchemaViolation(std::string(f.name), "required field is missing");
      continue;
    }
    check_field(f, *it);
    out.payload[std::string(f.name)] = *it;
  }
  check_kind_specifics(kind, out.payload, domain);

  auto conf = object.find("confidence");
  if (conf == object.end()) throw SchemaViolation("confidence", "required field is missing");
  out.confidence = unit_number(*conf, "confidence");

  for (const char* name : {"reasoning_quality", "outcome_certainty"}) {
    auto it = object.find(name);
    if (has_judgment(kind)) {
      if (it == object.end()) throw SchemaViolation(name, "required field is missing");
      (std::string_view(name) == "reasoning_quality" ? out.reasoning_quality : out.outcome_certainty) =
          unit_number(*it, name);
    } else if (it != object.end()) {
      throw SchemaViolation(name, "not part of the " + std::string(to_string(kind)) + " contract");
    }
  }
  if (auto it = object.find("citations"); it != object.end()) {
    check_string_array(*it, "citations");
    out.citations = it->get<std::vector<std::string>>();
  }
  if (auto it = object.find("claims"); it != object.end()) {
    if (!it->is_array()) throw SchemaViolation("claims", "expected a list");
    for (std::size_t i = 0; i < it->size(); ++i) {
      const json& c = (*it)[i];
      const std::string at = "claims[" + std::to_string(i) + "]";
      if (!c.is_object() || !c.contains("text") || !c["text"].is_string()) {
        throw SchemaViolation(at + ".text", "expected a string");
      }
      Claim claim{c["text"].get<std::string>(), {}};
      if (c.contains("citations")) {
        check_string_array(c["citations"], at + ".citations");
        claim.citations = c["citations"].get<std::vector<std::string>>();
      }
      out.claims.push_back(std::move(claim));
    }
  }
  return out;
}

std::vector<std::string> violation_rule_ids(const json& verify_payload) {
  std::vector<std::string> ids;
  auto it = verify_payload.find("violations");
  if (it == verify_payload.end() || !it->is_array()) return ids;
  for (const auto& v : *it) {
    if (v.is_string()) ids.push_back(v.get<std::string>());
    else if (v.is_object() && v.contains("rule") && v["rule"].is_string()) ids.push_back(v["rule"].get<std::string>());
  }
  return ids;
}

}  // namespace govdec
