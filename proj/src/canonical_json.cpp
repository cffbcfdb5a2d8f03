#include <algorithm>
#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include <openssl/evp.h>

#include "govdec/error.hpp"
#include "govdec/ledger.hpp"
#include "govdec/types.hpp"

namespace govdec {

namespace {

constexpr char kHex[] = "0123456789abcdef";

void append_u16(std::string& out, std::uint32_t unit) {
  out += "\\u";
  out += kHex[(unit >> 12) & 0xF];
  out += kHex[(unit >> 8) & 0xF];
  out += kHex[(unit >> 4) & 0xF];
  out += kHex[unit & 0xF];
}

// Decodes one UTF-8 sequence starting at s[i]; advances i.
std::uint32_t decode_utf8(const std::string& s, std::size_t& i) {
  const auto byte = [&](std::size_t k) { return static_cast<unsigned char>(s[k]); };
  const unsigned char b0 = byte(i);
  std::uint32_t cp = 0;
  std::size_t len = 0;
  if (b0 < 0x80) {
    ++i;
    return b0;
  } else if ((b0 & 0xE0) == 0xC0) {
    cp = b0 & 0x1F;
    len = 2;
  } else if ((b0 & 0xF0) == 0xE0) {
    cp = b0 & 0x0F;
    len = 3;
  } else if ((b0 & 0xF8) == 0xF0) {
    cp = b0 & 0x07;
    len = 4;
  } else {
    throw SerializationError("invalid UTF-8 lead byte");
  }
  if (i + len > s.size()) throw SerializationError("truncated UTF-8 sequence");
  for (std::size_t k = 1; k < len; ++k) {
    const unsigned char b = byte(i + k);
    if ((b & 0xC0) != 0x80) throw SerializationError("invalid UTF-8 continuation byte");
    cp = (cp << 6) | (b & 0x3F);
  }
  const bool overlong = (len == 2 && cp < 0x80) || (len == 3 && cp < 0x800) ||
                        (len == 4 && cp < 0x10000);
  if (overlong || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) {
    throw SerializationError("invalid UTF-8 code point");
  }
  i += len;
  return cp;
}

void write_string(std::string& out, const std::string& s) {
  out += '"';
  std::size_t i = 0;
  while (i < s.size()) {
    const std::uint32_t cp = decode_utf8(s, i);
    switch (cp) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\b': out += "\\b"; break;
      case '\f': out += "\\f"; break;
      case '\n': out += "\\n"; break;
      case '\r': out += "\\r"; break;
      case '\t': out += "\\t"; break;
      default:
        if (cp < 0x20) {
          append_u16(out, cp);
        } else if (cp < 0x80) {
          out += static_cast<char>(cp);
        } else if (cp < 0x10000) {
          append_u16(out, cp);
        } else {
          const std::uint32_t v = cp - 0x10000;
          append_u16(out, 0xD800 + (v >> 10));
          append_u16(out, 0xDC00 + (v & 0x3FF));
        }
    }
  }
  out += '"';
}

void write_value(std::string& out, const json& v) {
  switch (v.type()) {
    case json::value_t::object: {
      std::vector<const std::string*> keys;
      keys.reserve(v.size());
      for (auto it = v.begin(); it != v.end(); ++it) keys.push_back(&it.key());
      std::sort(keys.begin(), keys.end(), [](auto* a, auto* b) { return *a < *b; });
      out += '{';
      bool first = true;
      for (const auto* k : keys) {
        if (!first) out += ',';
        first = false;
        write_string(out, *k);
        out += ':';
        write_value(out, v.at(*k));
      }
      out += '}';
      break;
    }
    case json::value_t::array: {
      out += '[';
      bool first = true;
      for (const auto& e : v) {
        if (!first) out += ',';
        first = false;
        write_value(out, e);
      }
      out += ']';
      break;
    }
    case json::value_t::string:
      write_string(out, v.get_ref<const std::string&>());
      break;
    case json::value_t::boolean:
      out += v.get<bool>() ? "true" : "false";
      break;
    case json::value_t::number_integer:
      out += std::to_string(v.get<std::int64_t>());
      break;
    case json::value_t::number_unsigned:
      out += std::to_string(v.get<std::uint64_t>());
      break;
    case json::value_t::number_float:
      throw SerializationError("floating-point values are not allowed in canonical content");
    case json::value_t::null:
      throw SerializationError("null is not in the canonical value domain");
    default:
      throw SerializationError("unsupported JSON value type");
  }
}

}  // namespace

std::string canonical_json(const json& value) {
  std::string out;
  write_value(out, value);
  return out;
}

json to_canonical_value(const json& value) {
  switch (value.type()) {
    case json::value_t::object: {
      json out = json::object();
      for (auto it = value.begin(); it != value.end(); ++it) {
        if (it->is_null()) continue;
        out[it.key()] = to_canonical_value(*it);
      }
      return out;
    }
    case json::value_t::array: {
      json out = json::array();
      for (const auto& e : value) out.push_back(e.is_null() ? json("null") : to_canonical_value(e));
      return out;
    }
    case json::value_t::number_float:
      return fixed6(value.get<double>());
    case json::value_t::null:
      return "null";
    default:
      return value;
  }
}

std::string sha256_hex(std::string_view data) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest.data(), &len, EVP_sha256(), nullptr) != 1) {
    throw Error("SHA-256 digest failed");
  }
  std::string out;
  out.reserve(len * 2);
  for (unsigned int i = 0; i < len; ++i) {
    out += kHex[digest[i] >> 4];
    out += kHex[digest[i] & 0xF];
  }
  return out;
}

}  // namespace govdec
