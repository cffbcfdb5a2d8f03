#include "govdec/safety.hpp"

#include <functional>
#include <regex>

#include "govdec/error.hpp"

namespace govdec {

namespace {

constexpr std::string_view kOpen = "\xE2\x9F\xA8";   // ⟨
constexpr std::string_view kClose = "\xE2\x9F\xA9";  // ⟩

void walk_strings(const json& v, const std::string& path, const std::function<void(const std::string&, const std::string&)>& fn) {
  if (v.is_string()) {
    fn(path, v.get_ref<const std::string&>());
  } else if (v.is_object()) {
    for (auto it = v.begin(); it != v.end(); ++it) {
      if (path.empty() && it.key() == kGroundTruthKey) continue;
      walk_strings(it.value(), path.empty() ? it.key() : path + "." + it.key(), fn);
    }
  } else if (v.is_array()) {
    for (std::size_t i = 0; i < v.size(); ++i) walk_strings(v[i], path + "[" + std::to_string(i) + "]", fn);
  }
}

/// Splits text into runs outside existing PII tokens.
struct Segment {
  std::string text;
  bool token = false;
};

std::vector<Segment> split_tokens(const std::string& text) {
  std::vector<Segment> out;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const std::size_t open = text.find(kOpen, pos);
    if (open == std::string::npos) break;
    const std::size_t close = text.find(kClose, open);
    if (close == std::string::npos) break;
    const std::string inner = text.substr(open + kOpen.size(), close - open - kOpen.size());
    if (inner.rfind("PII:", 0) != 0) {
      out.push_back({text.substr(pos, close + kClose.size() - pos), false});
      pos = close + kClose.size();
      continue;
    }
    if (open > pos) out.push_back({text.substr(pos, open - pos), false});
    out.push_back({text.substr(open, close + kClose.size() - open), true});
    pos = close + kClose.size();
  }
  if (pos < text.size()) out.push_back({text.substr(pos), false});
  return out;
}

struct Compiled {
  std::string category;
  std::regex re;
};

std::string redact_segment(const std::string& seg, const std::vector<Compiled>& patterns,
                           const std::multimap<std::string, std::string>& literals, RedactionMap& map) {
  std::string out;
  std::size_t pos = 0;
  while (pos < seg.size()) {
    std::size_t best_begin = std::string::npos, best_len = 0;
    std::string best_cat;
    for (const auto& [cat, value] : literals) {
      if (value.empty()) continue;
      const std::size_t at = seg.find(value, pos);
      if (at == std::string::npos) continue;
      if (at < best_begin || (at == best_begin && value.size() > best_len)) {
        best_begin = at;
        best_len = value.size();
        best_cat = cat;
      }
    }
    for (const auto& p : patterns) {
      std::smatch m;
      auto first = seg.cbegin() + static_cast<std::ptrdiff_t>(pos);
      if (!std::regex_search(first, seg.cend(), m, p.re)) continue;
      if (m.length(0) == 0) continue;
      const std::size_t at = pos + static_cast<std::size_t>(m.position(0));
      const auto len = static_cast<std::size_t>(m.length(0));
      if (at < best_begin || (at == best_begin && len > best_len)) {
        best_begin = at;
        best_len = len;
        best_cat = p.category;
      }
    }
    if (best_begin == std::string::npos) break;
    out.append(seg, pos, best_begin - pos);
    out += map.token_for(best_cat, seg.substr(best_begin, best_len));
    pos = best_begin + best_len;
  }
  if (pos < seg.size()) out.append(seg, pos, std::string::npos);
  return out;
}

std::vector<Compiled> compile(const PiiPolicy& policy) {
  std::vector<Compiled> out;
  for (const auto& p : policy.patterns) out.push_back({p.category, std::regex(p.regex, std::regex::ECMAScript)});
  return out;
}

}  // namespace

json GuardrailFinding::to_json() const {
  return {{"pattern_id", pattern_id},
          {"category", std::string(to_string(category))},
          {"severity", std::string(to_string(severity))},
          {"field", field},
          {"span", {begin, end}},
          {"matched", matched}};
}

std::vector<GuardrailFinding> scan_text(const std::string& text, const std::vector<GuardrailPattern>& patterns,
                                        const std::string& field) {
  std::vector<GuardrailFinding> out;
  for (const auto& p : patterns) {
    const std::regex re(p.regex, std::regex::ECMAScript | std::regex::icase);
    for (auto it = std::sregex_iterator(text.begin(), text.end(), re); it != std::sregex_iterator(); ++it) {
      if (it->length(0) == 0) continue;
      GuardrailFinding f;
      f.pattern_id = p.id;
      f.category = p.category;
      f.severity = p.severity;
      f.field = field;
      f.begin = static_cast<std::size_t>(it->position(0));
      f.end = f.begin + static_cast<std::size_t>(it->length(0));
      f.matched = it->str(0);
      out.push_back(std::move(f));
    }
  }
  return out;
}

std::vector<GuardrailFinding> scan(const json& case_fields, const std::vector<GuardrailPattern>& patterns) {
  std::vector<GuardrailFinding> out;
  walk_strings(case_fields, "", [&](const std::string& path, const std::string& s) {
    auto found = scan_text(s, patterns, path);
    out.insert(out.end(), found.begin(), found.end());
  });
  return out;
}

std::string pii_token(const std::string& category, int n) {
  return std::string(kOpen) + "PII:" + category + ":" + std::to_string(n) + std::string(kClose);
}

const std::string& RedactionMap::token_for(const std::string& category, const std::string& original) {
  for (const auto& e : entries_) {
    if (e.category == category && e.original == original) return e.token;
  }
  const int n = ++counters_[category];
  entries_.push_back({pii_token(category, n), category, original});
  return entries_.back().token;
}

const std::string* RedactionMap::original(const std::string& token) const {
  for (const auto& e : entries_) {
    if (e.token == token) return &e.original;
  }
  return nullptr;
}

json RedactionMap::to_json() const {
  json entries = json::array();
  for (const auto& e : entries_) entries.push_back({{"token", e.token}, {"category", e.category}, {"original", e.original}});
  return {{"scope", scope}, {"entries", entries}};
}

RedactionMap RedactionMap::from_json(const json& j) {
  RedactionMap m;
  m.scope = j.value("scope", std::string());
  for (const auto& e : j.value("entries", json::array())) {
    const std::string cat = e.at("category").get<std::string>();
    m.entries_.push_back({e.at("token").get<std::string>(), cat, e.at("original").get<std::string>()});
    ++m.counters_[cat];
  }
  return m;
}

std::string redact_into(const std::string& text, const PiiPolicy& policy, RedactionMap& map,
                        const std::multimap<std::string, std::string>& literals) {
  const auto patterns = compile(policy);
  std::string out;
  for (const auto& seg : split_tokens(text)) {
    out += seg.token ? seg.text : redact_segment(seg.text, patterns, literals, map);
  }
  return out;
}

Redaction redact(const std::string& text, const PiiPolicy& policy) {
  Redaction r;
  r.text = redact_into(text, policy, r.map);
  return r;
}

json redact_case(const json& case_view, const PiiPolicy& policy, RedactionMap& map) {
  std::multimap<std::string, std::string> literals;
  for (const auto& [path, category] : policy.fields) {
    const json* v = find_path(case_view, path);
    if (v == nullptr) continue;
    if (v->is_string()) {
      literals.emplace(category, v->get<std::string>());
    } else if (v->is_number()) {
      literals.emplace(category, v->dump());
    }
  }
  std::function<json(const json&)> rec = [&](const json& v) -> json {
    if (v.is_string()) return redact_into(v.get<std::string>(), policy, map, literals);
    if (v.is_object()) {
      json o = json::object();
      for (auto it = v.begin(); it != v.end(); ++it) o[it.key()] = rec(it.value());
      return o;
    }
    if (v.is_array()) {
      json a = json::array();
      for (const auto& x : v) a.push_back(rec(x));
      return a;
    }
    if (v.is_number()) {
      // Identifiers stored as numbers are matched by their literal form.
      for (const auto& [cat, lit] : literals) {
        if (lit == v.dump()) return map.token_for(cat, lit);
      }
    }
    return v;
  };
  return rec(case_view);
}

std::string deredact(const std::string& text, const RedactionMap& map, const Actor& actor) {
  if (actor.role != Role::Reviewer) {
    throw UnauthorizedActor("de-redaction requires a reviewer, got '" + actor.id + "'");
  }
  std::string out;
  for (const auto& seg : split_tokens(text)) {
    const std::string* o = seg.token ? map.original(seg.text) : nullptr;
    out += o ? *o : seg.text;
  }
  return out;
}

std::string_view to_string(KillScope s) noexcept {
  switch (s) {
    case KillScope::Global: return "global";
    case KillScope::Domain: return "domain";
    case KillScope::Instance: return "instance";
  }
  return "global";
}

std::optional<KillScope> parse_kill_scope(std::string_view s) noexcept {
  if (s == "global") return KillScope::Global;
  if (s == "domain") return KillScope::Domain;
  if (s == "instance") return KillScope::Instance;
  return std::nullopt;
}

json KillSwitch::to_json() const {
  return {{"scope", std::string(to_string(scope))}, {"target", target}, {"engaged", engaged}, {"reason", reason}};
}

void KillSwitchBoard::engage(KillScope scope, const std::string& target, const std::string& reason) {
  std::lock_guard lock(mu_);
  const std::string key = scope == KillScope::Global ? std::string() : target;
  auto [it, inserted] = switches_.try_emplace({scope, key}, KillSwitch{scope, key, true, reason});
  if (!inserted) it->second.reason = reason;
  engaged_count_.store(static_cast<int>(switches_.size()));
}

void KillSwitchBoard::release(KillScope scope, const std::string& target) {
  std::lock_guard lock(mu_);
  switches_.erase({scope, scope == KillScope::Global ? std::string() : target});
  engaged_count_.store(static_cast<int>(switches_.size()));
}

KillCheck KillSwitchBoard::check(const std::string& domain_id, const std::string& instance_id) const {
  if (engaged_count_.load() == 0) return {};
  std::lock_guard lock(mu_);
  for (const auto& key : {std::make_pair(KillScope::Global, std::string()), std::make_pair(KillScope::Domain, domain_id),
                          std::make_pair(KillScope::Instance, instance_id)}) {
    if (auto it = switches_.find(key); it != switches_.end()) return {true, it->second};
  }
  return {};
}

std::vector<KillSwitch> KillSwitchBoard::engaged() const {
  std::lock_guard lock(mu_);
  std::vector<KillSwitch> out;
  for (const auto& [k, v] : switches_) out.push_back(v);
  return out;
}

}  // namespace govdec
