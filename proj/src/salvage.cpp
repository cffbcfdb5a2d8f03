#include "govdec/primitives.hpp"

#include "govdec/error.hpp"

namespace govdec {

namespace {

std::optional<json> try_parse(std::string_view text, std::string& diagnostic) {
  try {
    return json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    diagnostic = e.what();
    return std::nullopt;
  }
}

/// Offset one past the '}' closing the object opened at `open`, or npos.
std::size_t balanced_end(std::string_view s, std::size_t open) {
  int depth = 0;
  bool in_string = false;
  bool escape = false;
  for (std::size_t i = open; i < s.size(); ++i) {
    const char c = s[i];
    if (in_string) {
      if (escape) escape = false;
      else if (c == '\\') escape = true;
      else if (c == '"') in_string = false;
      continue;
    }
    if (c == '"') in_string = true;
    else if (c == '{') ++depth;
    else if (c == '}' && --depth == 0) return i + 1;
  }
  return std::string_view::npos;
}

std::optional<std::string_view> fenced_block(std::string_view s) {
  const std::size_t open = s.find("```");
  if (open == std::string_view::npos) return std::nullopt;
  std::size_t body = s.find('\n', open + 3);
  if (body == std::string_view::npos) return std::nullopt;
  ++body;
  const std::size_t close = s.find("```", body);
  if (close == std::string_view::npos) return s.substr(body);
  return s.substr(body, close - body);
}

std::string repair(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  bool in_string = false;
  bool escape = false;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const char c = s[i];
    if (in_string) {
      if (escape) {
        escape = false;
        out += c;
      } else if (c == '\\') {
        escape = true;
        out += c;
      } else if (c == '"') {
        in_string = false;
        out += c;
      } else if (c == '\n') {
        out += "\\n";
      } else if (c == '\r') {
        out += "\\r";
      } else if (c == '\t') {
        out += "\\t";
      } else {
        out += c;
      }
      continue;
    }
    if (c == '"') {
      in_string = true;
      out += c;
    } else if (c == ',') {
      std::size_t j = i + 1;
      while (j < s.size() && (s[j] == ' ' || s[j] == '\n' || s[j] == '\r' || s[j] == '\t')) ++j;
      if (j < s.size() && (s[j] == '}' || s[j] == ']')) continue;
      out += c;
    } else {
      out += c;
    }
  }
  return out;
}

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

}  // namespace

std::optional<json> salvage_stage(int stage, std::string_view raw, std::string& diagnostic) {
  std::string why;
  switch (stage) {
    case 1: {
      if (auto j = try_parse(trim(raw), why)) return j;
      diagnostic = "stage 1 (strict): " + why;
      return std::nullopt;
    }
    case 2: {
      const std::size_t open = raw.find('{');
      if (open == std::string_view::npos) {
        diagnostic = "stage 2 (balanced object): no '{' in response";
        return std::nullopt;
      }
      const std::size_t end = balanced_end(raw, open);
      if (end == std::string_view::npos) {
        diagnostic = "stage 2 (balanced object): object opened at offset " + std::to_string(open) +
                     " never closes";
        return std::nullopt;
      }
      if (auto j = try_parse(raw.substr(open, end - open), why)) return j;
      diagnostic = "stage 2 (balanced object): " + why;
      return std::nullopt;
    }
    case 3: {
      const auto block = fenced_block(raw);
      if (!block) {
        diagnostic = "stage 3 (fence strip): no code fence";
        return std::nullopt;
      }
      if (auto j = try_parse(trim(*block), why)) return j;
      diagnostic = "stage 3 (fence strip): " + why;
      return std::nullopt;
    }
    case 4: {
      std::string_view candidate = raw;
      if (const auto block = fenced_block(raw)) {
        candidate = *block;
      } else {
        const std::size_t open = raw.find('{');
        const std::size_t close = raw.rfind('}');
        if (open != std::string_view::npos && close != std::string_view::npos && close > open) {
          candidate = raw.substr(open, close - open + 1);
        }
      }
      if (auto j = try_parse(trim(repair(candidate)), why)) return j;
      diagnostic = "stage 4 (repair): " + why;
      return std::nullopt;
    }
    default:
      throw ContractError("salvage stage out of range: " + std::to_string(stage));
  }
}

CognitiveOutput parse_output(Primitive kind, std::string_view raw, const DomainConfig* domain) {
  std::vector<std::string> diagnostics;
  if (trim(raw).empty()) throw ParseFailure({"empty response"});
  for (int stage = 1; stage <= kSalvageStages; ++stage) {
    std::string diag;
    const std::optional<json> value = salvage_stage(stage, raw, diag);
    if (!value) {
      diagnostics.push_back(diag);
      continue;
    }
    try {
      CognitiveOutput out = validate_payload(kind, *value, domain);
      out.raw_text = std::string(raw);
      out.salvage_stage = stage;
      return out;
    } catch (const Error& e) {
      diagnostics.push_back("stage " + std::to_string(stage) + " parsed but failed validation: " + e.what());
    }
  }
  throw ParseFailure(std::move(diagnostics));
}

}  // namespace govdec
