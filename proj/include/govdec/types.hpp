#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace govdec {

/// The nine typed cognitive primitives.
enum class Primitive : std::uint8_t {
  Retrieve,
  Classify,
  Investigate,
  Verify,
  Challenge,
  Reflect,
  Deliberate,
  Govern,
  Generate,
};

inline constexpr std::array<Primitive, 9> kAllPrimitives = {
    Primitive::Retrieve,  Primitive::Classify,   Primitive::Investigate,
    Primitive::Verify,    Primitive::Challenge,  Primitive::Reflect,
    Primitive::Deliberate, Primitive::Govern,    Primitive::Generate,
};

std::string_view to_string(Primitive p) noexcept;
std::optional<Primitive> parse_primitive(std::string_view name) noexcept;
/// Throws UnknownPrimitive.
Primitive primitive_from_string(std::string_view name);

/// Governance tiers; the enumerator order is the escalation order.
enum class Tier : std::uint8_t { Auto = 0, SpotCheck = 1, Gate = 2, Hold = 3 };

inline constexpr std::array<Tier, 4> kAllTiers = {Tier::Auto, Tier::SpotCheck, Tier::Gate,
                                                  Tier::Hold};

std::string_view to_string(Tier t) noexcept;
/// Accepts "AUTO"/"auto", "SPOT_CHECK"/"spot_check", ...
std::optional<Tier> parse_tier(std::string_view name) noexcept;

constexpr bool suspends(Tier t) noexcept { return t == Tier::Gate || t == Tier::Hold; }

/// Fixed six-decimal rendering used for every real value that enters the
/// ledger (hashing never depends on float formatting).
std::string fixed6(double v);

/// Rounds through the six-decimal form so in-memory values equal what a
/// ledger replay parses back.
double quantize6(double v);

}  // namespace govdec
