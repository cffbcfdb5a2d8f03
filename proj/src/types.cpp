#include "govdec/types.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <cstdio>

#include "govdec/error.hpp"

namespace govdec {

namespace {

constexpr std::array<std::string_view, 9> kPrimitiveNames = {
    "retrieve", "classify", "investigate", "verify",   "challenge",
    "reflect",  "deliberate", "govern",    "generate",
};

constexpr std::array<std::string_view, 4> kTierNames = {"AUTO", "SPOT_CHECK", "GATE", "HOLD"};

}  // namespace

std::string_view to_string(Primitive p) noexcept {
  return kPrimitiveNames[static_cast<std::size_t>(p)];
}

std::optional<Primitive> parse_primitive(std::string_view name) noexcept {
  for (std::size_t i = 0; i < kPrimitiveNames.size(); ++i) {
    if (kPrimitiveNames[i] == name) return static_cast<Primitive>(i);
  }
  return std::nullopt;
}

Primitive primitive_from_string(std::string_view name) {
  if (auto p = parse_primitive(name)) return *p;
  throw UnknownPrimitive("unknown primitive: " + std::string(name));
}

std::string_view to_string(Tier t) noexcept { return kTierNames[static_cast<std::size_t>(t)]; }

std::optional<Tier> parse_tier(std::string_view name) noexcept {
  std::string upper(name);
  std::transform(upper.begin(), upper.end(), upper.begin(),
                 [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
  if (upper == "SPOTCHECK" || upper == "SPOT CHECK") upper = "SPOT_CHECK";
  for (std::size_t i = 0; i < kTierNames.size(); ++i) {
    if (kTierNames[i] == upper) return static_cast<Tier>(i);
  }
  return std::nullopt;
}

std::string fixed6(double v) {
  if (!std::isfinite(v)) v = 0.0;
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  std::string s(buf);
  if (s == "-0.000000") s = "0.000000";
  return s;
}

double quantize6(double v) { return std::strtod(fixed6(v).c_str(), nullptr); }

}  // namespace govdec
