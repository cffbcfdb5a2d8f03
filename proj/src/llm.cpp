#include "govdec/llm.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

#include <yaml-cpp/yaml.h>

#include "govdec/error.hpp"

namespace govdec {

namespace {

std::string env_or_empty(const char* name) {
  const char* v = std::getenv(name);
  return v ? std::string(v) : std::string();
}

json read_json_file(const std::filesystem::path& p) {
  std::ifstream in(p);
  if (!in) throw NotFound("cannot open " + p.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw SerializationError(p.string() + ": " + e.what());
  }
}

}  // namespace

ModelPolicy ModelPolicy::defaults() {
  ModelPolicy p;
  for (auto k : kAllPrimitives) {
    const Registration& r = registry_lookup(k);
    p.alias[k] = r.model_alias;
    p.token_budget[k] = r.token_budget;
    p.temperature[k] = r.temperature;
  }
  return p;
}

ModelPolicy ModelPolicy::load(const std::filesystem::path& path) {
  ModelPolicy p = defaults();
  YAML::Node root;
  try {
    root = YAML::LoadFile(path.string());
  } catch (const YAML::Exception& e) {
    throw ConfigError(path.string(), e.what());
  }
  if (!root.IsMap()) throw ConfigError(".", "expected a mapping");
  try {
    for (const auto& kv : root) {
      const std::string key = kv.first.as<std::string>();
      if (key == "aliases") {
        for (const auto& a : kv.second) p.models[a.first.as<std::string>()] = a.second.as<std::string>();
      } else if (key == "retry_limit") {
        p.retry_limit = kv.second.as<int>();
        if (p.retry_limit < 1) throw ConfigError(".retry_limit", "must be at least 1");
      } else if (key == "chooser_alias") {
        p.chooser_alias = kv.second.as<std::string>();
      } else if (key == "primitives") {
        for (const auto& e : kv.second) {
          const std::string name = e.first.as<std::string>();
          auto kind = parse_primitive(name);
          if (!kind) throw ConfigError(".primitives." + name, "unknown primitive");
          for (const auto& f : e.second) {
            const std::string field = f.first.as<std::string>();
            if (field == "alias") {
              p.alias[*kind] = f.second.as<std::string>();
            } else if (field == "token_budget") {
              p.token_budget[*kind] = f.second.as<int>();
            } else if (field == "temperature") {
              p.temperature[*kind] = f.second.as<double>();
            } else {
              throw ConfigError(".primitives." + name + "." + field, "unknown key");
            }
          }
        }
      } else {
        throw ConfigError("." + key, "unknown key");
      }
    }
  } catch (const YAML::Exception& e) {
    throw ConfigError(path.string(), e.what());
  }
  for (const auto& [k, a] : p.alias) {
    if (!p.models.count(a)) throw ConfigError(".primitives." + std::string(to_string(k)) + ".alias", "unknown alias " + a);
  }
  return p;
}

void ModelPolicy::apply_environment() {
  if (auto v = env_or_empty("LLM_MODEL_DEFAULT"); !v.empty()) models["default"] = v;
  if (auto v = env_or_empty("LLM_MODEL_STANDARD"); !v.empty()) models["standard"] = v;
}

ModelChoice ModelPolicy::resolve(Primitive kind) const {
  ModelChoice c;
  auto a = alias.find(kind);
  c.alias = a == alias.end() ? registry_lookup(kind).model_alias : a->second;
  auto m = models.find(c.alias);
  c.model_id = m == models.end() ? c.alias : m->second;
  auto b = token_budget.find(kind);
  c.token_budget = b == token_budget.end() ? registry_lookup(kind).token_budget : b->second;
  auto t = temperature.find(kind);
  c.temperature = t == temperature.end() ? registry_lookup(kind).temperature : t->second;
  return c;
}

ModelChoice ModelPolicy::resolve_chooser() const {
  ModelChoice c;
  c.alias = chooser_alias;
  auto m = models.find(c.alias);
  c.model_id = m == models.end() ? c.alias : m->second;
  c.token_budget = 16384;
  c.temperature = 0.0;
  return c;
}

// ---- scripted -------------------------------------------------------------

TrajectoryScript TrajectoryScript::from_json(const json& j) {
  TrajectoryScript s;
  s.case_id = j.at("case_id").get<std::string>();
  const json steps = j.value("steps", json::object());
  for (const auto& [name, v] : steps.items()) {
    auto& list = s.steps[name];
    if (v.is_array()) {
      for (const auto& a : v) list.push_back(a.is_string() ? a.get<std::string>() : a.dump());
    } else {
      list.push_back(v.is_string() ? v.get<std::string>() : v.dump());
    }
  }
  const json chooser = j.value("chooser", json::array());
  for (const auto& c : chooser) s.chooser.push_back(c.is_string() ? c.get<std::string>() : c.dump());
  return s;
}

json TrajectoryScript::to_json() const {
  json steps_j = json::object();
  for (const auto& [k, v] : steps) steps_j[k] = v;
  return {{"case_id", case_id}, {"steps", steps_j}, {"chooser", chooser}};
}

void ScriptedBackend::add(TrajectoryScript script) {
  std::string id = script.case_id;
  scripts_[id] = std::move(script);
}

void ScriptedBackend::load(const std::filesystem::path& path) {
  if (std::filesystem::is_directory(path)) {
    for (const auto& e : std::filesystem::directory_iterator(path)) {
      if (e.path().extension() == ".json") add(TrajectoryScript::from_json(read_json_file(e.path())));
    }
  } else {
    add(TrajectoryScript::from_json(read_json_file(path)));
  }
}

Completion ScriptedBackend::complete(const CompletionRequest& r) {
  auto it = scripts_.find(r.case_id);
  if (it == scripts_.end()) throw ScriptExhausted(r.case_id, r.step_name.empty() ? "chooser" : r.step_name);
  const TrajectoryScript& s = it->second;
  Completion c;
  if (r.purpose == CallPurpose::Chooser) {
    if (r.attempt < 0 || static_cast<std::size_t>(r.attempt) >= s.chooser.size()) {
      throw ScriptExhausted(r.case_id, "chooser#" + std::to_string(r.attempt));
    }
    c.text = s.chooser[static_cast<std::size_t>(r.attempt)];
  } else {
    auto st = s.steps.find(r.step_name);
    if (st == s.steps.end() || r.attempt < 1 || static_cast<std::size_t>(r.attempt) > st->second.size()) {
      throw ScriptExhausted(r.case_id, r.step_name + "#" + std::to_string(r.attempt));
    }
    c.text = st->second[static_cast<std::size_t>(r.attempt - 1)];
  }
  c.usage = {{"backend", "scripted"}, {"output_chars", c.text.size()}};
  return c;
}

// ---- execution ------------------------------------------------------------

std::string retry_prompt(const std::string& prompt, const std::string& diagnostics) {
  return prompt + "\n\nYour previous reply could not be used:\n" + diagnostics +
         "\nReply again with a single JSON object that matches the schema exactly.";
}

ExecutionResult execute_attempts(Primitive kind, const PromptBundle& bundle, const ModelPolicy& policy,
                                 Backend& backend, const std::string& case_id, const std::string& step_name,
                                 const DomainConfig* domain) {
  ExecutionResult res;
  res.model = policy.resolve(kind);
  std::string prompt = bundle.text;
  for (int attempt = 1; attempt <= policy.retry_limit; ++attempt) {
    CompletionRequest req;
    req.purpose = CallPurpose::Step;
    req.case_id = case_id;
    req.step_name = step_name;
    req.attempt = attempt;
    req.kind = kind;
    req.prompt = prompt;
    req.model = res.model;

    AttemptRecord rec;
    rec.attempt = attempt;
    std::string raw;
    try {
      raw = backend.complete(req).text;
    } catch (const ScriptExhausted&) {
      throw;
    } catch (const std::exception& e) {
      rec.diagnostics = std::string("backend error: ") + e.what();
      res.attempts.push_back(rec);
      prompt = retry_prompt(bundle.text, rec.diagnostics);
      continue;
    }
    try {
      CognitiveOutput out = parse_output(kind, raw, domain);
      rec.ok = true;
      rec.confidence = out.confidence;
      rec.salvage_stage = out.salvage_stage;
      res.attempts.push_back(rec);
      res.output = std::move(out);
      return res;
    } catch (const ParseFailure& e) {
      for (const auto& d : e.diagnostics()) rec.diagnostics += (rec.diagnostics.empty() ? "" : "\n") + d;
    } catch (const Error& e) {
      rec.diagnostics = e.what();
    }
    res.attempts.push_back(rec);
    prompt = retry_prompt(bundle.text, rec.diagnostics);
  }
  return res;
}

CognitiveOutput execute(Primitive kind, const PromptBundle& bundle, const ModelPolicy& policy, Backend& backend,
                        const std::string& case_id, const std::string& step_name, const DomainConfig* domain) {
  ExecutionResult r = execute_attempts(kind, bundle, policy, backend, case_id, step_name, domain);
  if (!r.output) {
    throw ExhaustedRetries(step_name + ": no parseable output after " + std::to_string(r.attempts.size()) +
                           " attempts; last: " + (r.attempts.empty() ? "" : r.attempts.back().diagnostics));
  }
  return std::move(*r.output);
}

Chooser make_chooser(Backend& backend, const ModelPolicy& policy, const std::string& case_id) {
  return [&backend, choice = policy.resolve_chooser(), case_id](const ChooserRequest& cr) {
    CompletionRequest req;
    req.purpose = CallPurpose::Chooser;
    req.case_id = case_id;
    req.attempt = cr.call_index;
    req.prompt = cr.diagnostics ? retry_prompt(cr.prompt, *cr.diagnostics) : cr.prompt;
    req.model = choice;
    const std::string raw = backend.complete(req).text;
    ChooserReply reply;
    for (int stage = 1; stage <= kSalvageStages; ++stage) {
      std::string diag;
      auto j = salvage_stage(stage, raw, diag);
      if (!j || !j->is_object() || !j->contains("next_primitive") || !(*j)["next_primitive"].is_string()) continue;
      reply.choice = (*j)["next_primitive"].get<std::string>();
      reply.reasoning = j->value("reasoning", std::string());
      return reply;
    }
    reply.reasoning = "unparseable chooser reply";
    return reply;
  };
}

}  // namespace govdec
