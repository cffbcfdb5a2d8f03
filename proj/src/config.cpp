#include "govdec/config.hpp"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <cerrno>
#include <cstdlib>
#include <fstream>
#include <regex>
#include <sstream>

#include "govdec/error.hpp"
#include "govdec/trigger.hpp"

namespace govdec {

namespace {

const std::set<std::string> kRoutingTerms = {"GATE", "HOLD", "SPOT_CHECK", "AUTO"};

std::string read_file(const std::filesystem::path& path, const char* what) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(path.string(), std::string("cannot open ") + what);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json scalar_to_json(const YAML::Node& n) {
  const std::string s = n.Scalar();
  if (n.Tag() == "!") return s;  // quoted
  if (s == "~" || s == "null" || s == "Null" || s == "NULL") return nullptr;
  if (s == "true" || s == "True" || s == "TRUE") return true;
  if (s == "false" || s == "False" || s == "FALSE") return false;
  if (!s.empty()) {
    char* end = nullptr;
    errno = 0;
    const long long i = std::strtoll(s.c_str(), &end, 10);
    if (errno == 0 && end == s.c_str() + s.size()) return i;
    end = nullptr;
    const double d = std::strtod(s.c_str(), &end);
    if (end == s.c_str() + s.size() && s.find_first_of("0123456789") != std::string::npos) return d;
  }
  return s;
}

json yaml_to_json(const YAML::Node& n) {
  switch (n.Type()) {
    case YAML::NodeType::Null:
    case YAML::NodeType::Undefined:
      return nullptr;
    case YAML::NodeType::Scalar:
      return scalar_to_json(n);
    case YAML::NodeType::Sequence: {
      json arr = json::array();
      for (const auto& item : n) arr.push_back(yaml_to_json(item));
      return arr;
    }
    case YAML::NodeType::Map: {
      json obj = json::object();
      for (const auto& kv : n) obj[kv.first.as<std::string>()] = yaml_to_json(kv.second);
      return obj;
    }
  }
  return nullptr;
}

/// A YAML node plus its path, with strict accessors: every read is typed and
/// every error names the offending key.
class Reader {
 public:
  Reader(YAML::Node node, std::string path) : node_(std::move(node)), path_(std::move(path)) {}

  const std::string& path() const { return path_; }
  const YAML::Node& node() const { return node_; }

  void expect_map() const {
    if (!node_.IsMap()) throw ConfigError(display(), "expected a mapping");
  }

  void only_keys(std::initializer_list<std::string_view> allowed) const {
    expect_map();
    for (const auto& kv : node_) {
      const std::string key = kv.first.as<std::string>();
      if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
        throw ConfigError(path_ + "." + key, "unknown key");
      }
    }
  }

  bool has(const std::string& key) const { return node_.IsMap() && node_[key].IsDefined() && !node_[key].IsNull(); }

  Reader child(const std::string& key) const { return Reader(node_[key], path_ + "." + key); }

  Reader required(const std::string& key) const {
    if (!has(key)) throw ConfigError(path_ + "." + key, "required key is missing");
    return child(key);
  }

  std::string str() const {
    if (!node_.IsScalar()) throw ConfigError(display(), "expected a string");
    return node_.Scalar();
  }

  std::string str(const std::string& key, const std::string& fallback) const {
    return has(key) ? child(key).str() : fallback;
  }

  double number() const {
    const json j = node_.IsScalar() ? scalar_to_json(node_) : json();
    if (!j.is_number()) throw ConfigError(display(), "expected a number");
    return j.get<double>();
  }

  int integer() const {
    const json j = node_.IsScalar() ? scalar_to_json(node_) : json();
    if (!j.is_number_integer()) throw ConfigError(display(), "expected an integer");
    return j.get<int>();
  }

  bool boolean() const {
    const json j = node_.IsScalar() ? scalar_to_json(node_) : json();
    if (!j.is_boolean()) throw ConfigError(display(), "expected true or false");
    return j.get<bool>();
  }

  std::vector<Reader> items() const {
    if (!node_.IsSequence()) throw ConfigError(display(), "expected a list");
    std::vector<Reader> out;
    for (std::size_t i = 0; i < node_.size(); ++i) {
      out.emplace_back(node_[i], path_ + "[" + std::to_string(i) + "]");
    }
    return out;
  }

  std::vector<std::pair<std::string, Reader>> entries() const {
    expect_map();
    std::vector<std::pair<std::string, Reader>> out;
    for (const auto& kv : node_) {
      const std::string key = kv.first.as<std::string>();
      out.emplace_back(key, Reader(kv.second, path_ + "." + key));
    }
    return out;
  }

  std::vector<std::string> strings() const {
    std::vector<std::string> out;
    for (const auto& r : items()) out.push_back(r.str());
    return out;
  }

  Primitive primitive() const {
    const auto p = parse_primitive(str());
    if (!p) throw ConfigError(display(), "unknown primitive '" + str() + "'");
    return *p;
  }

  Tier tier() const {
    const auto t = parse_tier(str());
    if (!t) throw ConfigError(display(), "unknown governance tier '" + str() + "'");
    return *t;
  }

  std::string display() const { return path_.empty() ? "." : path_; }

 private:
  YAML::Node node_;
  std::string path_;
};

YAML::Node parse_yaml(const std::string& text) {
  try {
    return YAML::Load(text);
  } catch (const YAML::Exception& e) {
    throw ConfigError(".", std::string("invalid YAML: ") + e.what());
  }
}

void check_schema_version(const Reader& root) {
  const int v = root.required("schema_version").integer();
  if (v != kConfigSchemaVersion) {
    throw ConfigError(".schema_version", "unsupported version " + std::to_string(v));
  }
}

Primitive primitive_key(const std::string& key, const Reader& at) {
  const auto p = parse_primitive(key);
  if (!p) throw ConfigError(at.path(), "unknown primitive '" + key + "'");
  return *p;
}

void parse_governance(const Reader& r, GovernanceConfig& g) {
  r.only_keys({"default_tier", "decision_class", "confidence_floors", "escalate_to",
               "high_stakes_dispositions", "sla_hours", "spot_check_rate", "delegation"});
  if (r.has("default_tier")) g.default_tier = r.child("default_tier").tier();
  if (r.has("decision_class")) {
    const Reader c = r.child("decision_class");
    const std::string v = c.str();
    if (v == "routine") g.decision_class = DecisionClass::Routine;
    else if (v == "automatable") g.decision_class = DecisionClass::Automatable;
    else throw ConfigError(c.path(), "expected routine or automatable");
  }
  if (r.has("confidence_floors")) {
    for (const auto& [key, val] : r.child("confidence_floors").entries()) {
      const double floor = val.number();
      if (floor < 0.0 || floor > 1.0) throw ConfigError(val.path(), "floor outside [0,1]");
      g.confidence_floors[primitive_key(key, val)] = floor;
    }
  }
  if (r.has("escalate_to")) g.escalate_to = r.child("escalate_to").tier();
  if (r.has("high_stakes_dispositions")) {
    for (const auto& s : r.child("high_stakes_dispositions").strings()) g.high_stakes_dispositions.insert(s);
  }
  if (r.has("sla_hours")) {
    const Reader s = r.child("sla_hours");
    s.only_keys({"gate", "hold"});
    if (s.has("gate")) g.sla_hours_gate = s.child("gate").integer();
    if (s.has("hold")) g.sla_hours_hold = s.child("hold").integer();
    if (g.sla_hours_gate <= 0 || g.sla_hours_hold <= 0) throw ConfigError(s.path(), "SLA must be positive");
  }
  if (r.has("spot_check_rate")) {
    const Reader s = r.child("spot_check_rate");
    g.spot_check_rate = s.number();
    if (g.spot_check_rate < 0.0 || g.spot_check_rate > 1.0) throw ConfigError(s.path(), "rate outside [0,1]");
  }
  if (r.has("delegation")) {
    const Reader d = r.child("delegation");
    d.only_keys({"mode", "reviewers", "quorum"});
    if (d.has("mode")) {
      const Reader m = d.child("mode");
      const auto mode = parse_delegation_mode(m.str());
      if (!mode || *mode == DelegationMode::FireAndForget) {
        throw ConfigError(m.path(), "review delegation must be wait_for_result or parallel");
      }
      g.delegation_mode = *mode;
    }
    if (d.has("reviewers")) g.reviewers = d.child("reviewers").integer();
    if (d.has("quorum")) g.quorum = d.child("quorum").integer();
    if (g.reviewers < 1) throw ConfigError(d.path() + ".reviewers", "at least one reviewer");
    if (g.quorum < 0 || g.quorum > g.reviewers) throw ConfigError(d.path() + ".quorum", "quorum outside [0, reviewers]");
  }
}

GuardrailPattern parse_guardrail(const Reader& r) {
  r.only_keys({"id", "category", "severity", "regex"});
  GuardrailPattern g;
  g.id = r.required("id").str();
  const Reader cat = r.required("category");
  const std::string c = cat.str();
  if (c == "prompt_injection") g.category = GuardrailCategory::PromptInjection;
  else if (c == "force_approval") g.category = GuardrailCategory::ForceApproval;
  else if (c == "classification_manipulation") g.category = GuardrailCategory::ClassificationManipulation;
  else throw ConfigError(cat.path(), "unknown guardrail category '" + c + "'");
  const Reader sev = r.required("severity");
  const std::string s = sev.str();
  if (s == "critical") g.severity = Severity::Critical;
  else if (s == "warning") g.severity = Severity::Warning;
  else throw ConfigError(sev.path(), "severity must be critical or warning");
  const Reader rx = r.required("regex");
  g.regex = rx.str();
  try {
    std::regex test(g.regex, std::regex::ECMAScript | std::regex::icase);
  } catch (const std::regex_error& e) {
    throw ConfigError(rx.path(), std::string("invalid regex: ") + e.what());
  }
  return g;
}

}  // namespace

std::string_view to_string(GuardrailCategory c) noexcept {
  switch (c) {
    case GuardrailCategory::PromptInjection: return "prompt_injection";
    case GuardrailCategory::ForceApproval: return "force_approval";
    case GuardrailCategory::ClassificationManipulation: return "classification_manipulation";
  }
  return "prompt_injection";
}

std::string_view to_string(Severity s) noexcept {
  return s == Severity::Critical ? "critical" : "warning";
}

std::string_view to_string(DelegationMode m) noexcept {
  switch (m) {
    case DelegationMode::FireAndForget: return "fire_and_forget";
    case DelegationMode::WaitForResult: return "wait_for_result";
    case DelegationMode::Parallel: return "parallel";
  }
  return "wait_for_result";
}

std::optional<DelegationMode> parse_delegation_mode(std::string_view s) noexcept {
  if (s == "fire_and_forget") return DelegationMode::FireAndForget;
  if (s == "wait_for_result") return DelegationMode::WaitForResult;
  if (s == "parallel") return DelegationMode::Parallel;
  return std::nullopt;
}

std::string_view to_string(ExecutionMode m) noexcept {
  return m == ExecutionMode::Workflow ? "workflow" : "agentic";
}

bool DomainConfig::vocabulary_contains(const std::string& term) const {
  return std::find(deliberate_vocabulary.begin(), deliberate_vocabulary.end(), term) !=
         deliberate_vocabulary.end();
}

int TrajectoryConstraints::repeat_limit(Primitive p) const {
  auto it = max_repeat.find(p);
  return it == max_repeat.end() ? default_max_repeat : it->second;
}

DomainConfig parse_domain(const std::string& yaml_text) {
  const Reader root(parse_yaml(yaml_text), "");
  root.only_keys({"schema_version", "domain_id", "description", "deliberate_vocabulary",
                  "routing_terms_excluded", "orchestrator_strategy", "knowledge_sources",
                  "instructions", "primitive_params", "governance", "guardrails", "pii",
                  "compatibility", "legal_transitions", "case_schema"});
  check_schema_version(root);
  DomainConfig d;
  d.domain_id = root.required("domain_id").str();
  d.description = root.str("description", "");
  d.orchestrator_strategy = root.str("orchestrator_strategy", "");
  if (root.has("routing_terms_excluded")) d.routing_terms_excluded = root.child("routing_terms_excluded").boolean();

  const Reader vocab = root.required("deliberate_vocabulary");
  const auto items = vocab.items();
  if (items.empty()) throw ConfigError(vocab.path(), "vocabulary must not be empty");
  for (const auto& item : items) {
    const std::string term = item.str();
    if (d.routing_terms_excluded && kRoutingTerms.count(term)) {
      throw ConfigError(item.path(), "governance routing term '" + term +
                                         "' is not a valid disposition in this domain");
    }
    d.deliberate_vocabulary.push_back(term);
  }

  if (root.has("knowledge_sources")) {
    for (const auto& item : root.child("knowledge_sources").items()) {
      item.only_keys({"name", "description"});
      d.knowledge_sources.push_back({item.required("name").str(), item.str("description", "")});
    }
  }
  if (root.has("instructions")) {
    for (const auto& [key, val] : root.child("instructions").entries()) {
      d.instructions[primitive_key(key, val)] = val.str();
    }
  }
  if (root.has("primitive_params")) {
    for (const auto& [key, val] : root.child("primitive_params").entries()) {
      val.expect_map();
      d.primitive_params[primitive_key(key, val)] = yaml_to_json(val.node());
    }
  }
  if (root.has("governance")) parse_governance(root.child("governance"), d.governance);
  if (root.has("guardrails")) {
    for (const auto& item : root.child("guardrails").items()) d.guardrails.push_back(parse_guardrail(item));
  }
  if (root.has("pii")) {
    const Reader p = root.child("pii");
    p.only_keys({"patterns", "fields"});
    if (p.has("patterns")) {
      for (const auto& item : p.child("patterns").items()) {
        item.only_keys({"category", "regex"});
        PiiPattern pat{item.required("category").str(), item.required("regex").str()};
        try {
          std::regex test(pat.regex, std::regex::ECMAScript);
        } catch (const std::regex_error& e) {
          throw ConfigError(item.path() + ".regex", std::string("invalid regex: ") + e.what());
        }
        d.pii.patterns.push_back(std::move(pat));
      }
    }
    if (p.has("fields")) {
      for (const auto& [key, val] : p.child("fields").entries()) d.pii.fields[key] = val.str();
    }
  }
  if (root.has("compatibility")) {
    for (const auto& [key, val] : root.child("compatibility").entries()) {
      auto& set = d.compatibility[key];
      for (const auto& item : val.items()) {
        const std::string action = item.str();
        if (!d.vocabulary_contains(action)) {
          throw ConfigError(item.path(), "'" + action + "' is not in the deliberate vocabulary");
        }
        set.insert(action);
      }
    }
  }
  if (root.has("legal_transitions")) {
    for (const auto& [key, val] : root.child("legal_transitions").entries()) {
      if (key != "start") primitive_key(key, val);
      auto& set = d.legal_transitions[key];
      for (const auto& item : val.items()) set.insert(item.primitive());
    }
    if (d.legal_transitions.count("govern") && !d.legal_transitions["govern"].empty()) {
      throw ConfigError(".legal_transitions.govern", "govern is terminal");
    }
  }
  if (root.has("case_schema")) {
    const Reader c = root.child("case_schema");
    c.only_keys({"required"});
    if (c.has("required")) d.case_schema.required = c.child("required").strings();
  }
  return d;
}

DomainConfig load_domain(const std::filesystem::path& path) {
  return parse_domain(read_file(path, "domain config"));
}

WorkflowConfig parse_workflow(const std::string& yaml_text) {
  const Reader root(parse_yaml(yaml_text), "");
  root.only_keys({"schema_version", "workflow_id", "domain", "mode", "goal",
                  "available_primitives", "steps", "constraints"});
  check_schema_version(root);
  WorkflowConfig w;
  w.workflow_id = root.required("workflow_id").str();
  w.domain = root.required("domain").str();
  const Reader mode = root.required("mode");
  if (mode.str() == "workflow") w.mode = ExecutionMode::Workflow;
  else if (mode.str() == "agentic") w.mode = ExecutionMode::Agentic;
  else throw ConfigError(mode.path(), "mode must be workflow or agentic");
  w.goal = root.str("goal", "");

  if (root.has("steps")) {
    if (w.mode != ExecutionMode::Workflow) throw ConfigError(".steps", "declared steps require mode: workflow");
    std::set<std::string> names;
    for (const auto& item : root.child("steps").items()) {
      item.only_keys({"name", "primitive", "params", "transition_condition"});
      DeclaredStep s;
      s.step_name = item.required("name").str();
      if (!names.insert(s.step_name).second) throw ConfigError(item.path() + ".name", "duplicate step name");
      s.primitive = item.required("primitive").primitive();
      if (item.has("params")) {
        item.child("params").expect_map();
        s.params = yaml_to_json(item.child("params").node());
      }
      if (item.has("transition_condition")) {
        const Reader tc = item.child("transition_condition");
        try {
          TriggerExpr::parse(tc.str());
        } catch (const TriggerParseError& e) {
          throw ConfigError(tc.path(), e.what());
        }
        s.transition_condition = tc.str();
      }
      w.declared_steps.push_back(std::move(s));
    }
  }

  if (root.has("available_primitives")) {
    for (const auto& item : root.child("available_primitives").items()) {
      w.available_primitives.insert(item.primitive());
    }
  } else if (w.mode == ExecutionMode::Workflow) {
    for (const auto& s : w.declared_steps) w.available_primitives.insert(s.primitive);
    w.available_primitives.insert(Primitive::Govern);
  }

  if (root.has("constraints")) {
    const Reader c = root.child("constraints");
    c.only_keys({"must_include", "max_steps", "must_end_with", "max_repeat", "default_max_repeat"});
    if (c.has("must_include")) {
      for (const auto& item : c.child("must_include").items()) w.constraints.must_include.insert(item.primitive());
    }
    if (c.has("max_steps")) w.constraints.max_steps = c.child("max_steps").integer();
    if (c.has("must_end_with")) w.constraints.must_end_with = c.child("must_end_with").primitive();
    if (c.has("default_max_repeat")) w.constraints.default_max_repeat = c.child("default_max_repeat").integer();
    if (c.has("max_repeat")) {
      for (const auto& [key, val] : c.child("max_repeat").entries()) {
        const int limit = val.integer();
        if (limit < 1) throw ConfigError(val.path(), "max_repeat must be at least 1");
        w.constraints.max_repeat[primitive_key(key, val)] = limit;
      }
    }
    if (w.constraints.max_steps < static_cast<int>(w.constraints.must_include.size()) + 1) {
      throw ConfigError(".constraints.max_steps", "must be at least |must_include| + 1");
    }
  }

  if (w.mode == ExecutionMode::Workflow) {
    if (w.declared_steps.empty()) throw ConfigError(".steps", "workflow mode requires declared steps");
  } else {
    if (w.goal.empty()) throw ConfigError(".goal", "agentic mode requires a goal");
    if (w.available_primitives.empty()) {
      throw ConfigError(".available_primitives", "agentic mode requires the available primitive vocabulary");
    }
    if (!w.available_primitives.count(Primitive::Govern)) {
      throw ConfigError(".available_primitives", "govern must be available");
    }
  }
  for (Primitive p : w.constraints.must_include) {
    if (!w.available_primitives.count(p)) {
      throw ConfigError(".constraints.must_include", std::string(to_string(p)) + " is not available");
    }
  }
  return w;
}

WorkflowConfig load_workflow(const std::filesystem::path& path) {
  return parse_workflow(read_file(path, "workflow config"));
}

const json* find_path(const json& root, std::string_view dotted) {
  const json* cur = &root;
  std::size_t start = 0;
  while (start <= dotted.size()) {
    const std::size_t dot = dotted.find('.', start);
    const std::string key(dotted.substr(start, dot == std::string_view::npos ? std::string_view::npos : dot - start));
    if (!cur->is_object()) return nullptr;
    auto it = cur->find(key);
    if (it == cur->end()) return nullptr;
    cur = &*it;
    if (dot == std::string_view::npos) break;
    start = dot + 1;
  }
  return cur;
}

CaseInput parse_case(const json& body, const DomainConfig* domain) {
  if (!body.is_object()) throw CaseSchemaError("case input must be a JSON object");
  auto id = body.find("case_id");
  if (id == body.end() || !id->is_string() || id->get<std::string>().empty()) {
    throw CaseSchemaError("case_id is required and must be a non-empty string");
  }
  CaseInput c;
  c.case_id = id->get<std::string>();
  c.fields = body;
  c.prompt_view = body;
  if (auto gt = c.prompt_view.find(kGroundTruthKey); gt != c.prompt_view.end()) {
    c.ground_truth = *gt;
    c.prompt_view.erase(gt);
  }
  if (auto docs = body.find("documents"); docs != body.end()) {
    if (!docs->is_object()) throw CaseSchemaError("documents must map names to text");
    for (const auto& [name, text] : docs->items()) {
      if (!text.is_string()) throw CaseSchemaError("document '" + name + "' must be text");
      c.documents[name] = text.get<std::string>();
    }
  }
  if (domain) {
    for (const auto& path : domain->case_schema.required) {
      if (!find_path(body, path)) {
        throw CaseSchemaError("case " + c.case_id + " is missing required field '" + path + "'");
      }
    }
  }
  return c;
}

CaseInput load_case(const std::filesystem::path& path, const DomainConfig* domain) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CaseSchemaError("cannot open case file: " + path.string());
  json body;
  try {
    body = json::parse(in);
  } catch (const json::parse_error& e) {
    throw CaseSchemaError("case file " + path.string() + " is not valid JSON: " + e.what());
  }
  return parse_case(body, domain);
}

}  // namespace govdec
