#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace govdec {

/// Boolean expressions over epistemic signals:
///
///   expr := term (("and"|"or") term)*
///   term := ["not"] atom
///   atom := signal op number | "has_flag(" FLAG ")" | "(" expr ")"
///   op   := < | <= | > | >= | ==
///
/// "and" binds tighter than "or". Parse errors carry the 0-based index of
/// the offending token (the token count when input ends early).
class TriggerExpr {
 public:
  struct Node;

  /// Supplies values at evaluation time. A missing signal makes its
  /// comparison false.
  struct Bindings {
    std::function<std::optional<double>(std::string_view)> signal;
    std::function<bool(std::string_view)> has_flag;
  };

  static TriggerExpr parse(std::string_view text);

  bool evaluate(const Bindings& b) const;
  const std::string& text() const noexcept { return text_; }

  static const std::vector<std::string>& signal_names();
  static const std::vector<std::string>& flag_names();

 private:
  std::string text_;
  std::shared_ptr<const Node> root_;
};

}  // namespace govdec
