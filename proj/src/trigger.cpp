#include "govdec/trigger.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>

#include "govdec/error.hpp"

namespace govdec {

namespace {

enum class Tok { Ident, Number, Op, LParen, RParen };

struct Token {
  Tok kind;
  std::string text;
  double number = 0.0;
};

std::vector<Token> tokenize(std::string_view s) {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < s.size()) {
    const char c = s[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
    } else if (c == '(') {
      out.push_back({Tok::LParen, "("});
      ++i;
    } else if (c == ')') {
      out.push_back({Tok::RParen, ")"});
      ++i;
    } else if (c == '<' || c == '>' || c == '=') {
      std::string op(1, c);
      if (i + 1 < s.size() && s[i + 1] == '=') op += '=';
      if (op == "=") throw TriggerParseError(out.size(), "'=' is not an operator; use '=='");
      out.push_back({Tok::Op, op});
      i += op.size();
    } else if (std::isdigit(static_cast<unsigned char>(c)) || c == '.' || c == '-') {
      std::size_t j = i + 1;
      while (j < s.size() && (std::isdigit(static_cast<unsigned char>(s[j])) || s[j] == '.')) ++j;
      const std::string text(s.substr(i, j - i));
      char* end = nullptr;
      const double v = std::strtod(text.c_str(), &end);
      if (end != text.c_str() + text.size()) {
        throw TriggerParseError(out.size(), "bad number '" + text + "'");
      }
      out.push_back({Tok::Number, text, v});
      i = j;
    } else if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t j = i + 1;
      while (j < s.size() && (std::isalnum(static_cast<unsigned char>(s[j])) || s[j] == '_')) ++j;
      out.push_back({Tok::Ident, std::string(s.substr(i, j - i))});
      i = j;
    } else {
      throw TriggerParseError(out.size(), std::string("unexpected character '") + c + "'");
    }
  }
  return out;
}

}  // namespace

struct TriggerExpr::Node {
  enum class Kind { And, Or, Not, Compare, HasFlag } kind;
  std::shared_ptr<const Node> lhs, rhs;
  std::string name;
  std::string op;
  double value = 0.0;
};

namespace {

using NodePtr = std::shared_ptr<const TriggerExpr::Node>;
using Node = TriggerExpr::Node;

class Parser {
 public:
  explicit Parser(std::vector<Token> toks) : toks_(std::move(toks)) {}

  NodePtr run() {
    NodePtr n = parse_or();
    if (pos_ != toks_.size()) fail("unexpected '" + toks_[pos_].text + "'");
    return n;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const { throw TriggerParseError(pos_, what); }

  const Token* peek() const { return pos_ < toks_.size() ? &toks_[pos_] : nullptr; }

  bool accept_word(std::string_view w) {
    const Token* t = peek();
    if (t && t->kind == Tok::Ident && t->text == w) {
      ++pos_;
      return true;
    }
    return false;
  }

  const Token& expect(Tok kind, std::string_view what) {
    const Token* t = peek();
    if (!t) fail("expected " + std::string(what) + " but input ended");
    if (t->kind != kind) fail("expected " + std::string(what) + ", got '" + t->text + "'");
    ++pos_;
    return *t;
  }

  NodePtr parse_or() {
    NodePtr lhs = parse_and();
    while (accept_word("or")) {
      auto n = std::make_shared<Node>();
      n->kind = Node::Kind::Or;
      n->lhs = lhs;
      n->rhs = parse_and();
      lhs = n;
    }
    return lhs;
  }

  NodePtr parse_and() {
    NodePtr lhs = parse_term();
    while (accept_word("and")) {
      auto n = std::make_shared<Node>();
      n->kind = Node::Kind::And;
      n->lhs = lhs;
      n->rhs = parse_term();
      lhs = n;
    }
    return lhs;
  }

  NodePtr parse_term() {
    if (accept_word("not")) {
      auto n = std::make_shared<Node>();
      n->kind = Node::Kind::Not;
      n->lhs = parse_atom();
      return n;
    }
    return parse_atom();
  }

  NodePtr parse_atom() {
    const Token* t = peek();
    if (!t) fail("expected a condition but input ended");
    if (t->kind == Tok::LParen) {
      ++pos_;
      NodePtr inner = parse_or();
      expect(Tok::RParen, "')'");
      return inner;
    }
    if (t->kind != Tok::Ident) fail("expected a signal name, got '" + t->text + "'");
    if (t->text == "has_flag") {
      ++pos_;
      expect(Tok::LParen, "'('");
      const Token& flag = expect(Tok::Ident, "a flag kind");
      const auto& flags = TriggerExpr::flag_names();
      if (std::find(flags.begin(), flags.end(), flag.text) == flags.end()) {
        --pos_;
        fail("unknown flag kind '" + flag.text + "'");
      }
      expect(Tok::RParen, "')'");
      auto n = std::make_shared<Node>();
      n->kind = Node::Kind::HasFlag;
      n->name = flag.text;
      return n;
    }
    const auto& signals = TriggerExpr::signal_names();
    if (std::find(signals.begin(), signals.end(), t->text) == signals.end()) {
      fail("unknown signal '" + t->text + "'");
    }
    auto n = std::make_shared<Node>();
    n->kind = Node::Kind::Compare;
    n->name = t->text;
    ++pos_;
    n->op = expect(Tok::Op, "a comparison operator").text;
    n->value = expect(Tok::Number, "a number").number;
    return n;
  }

  std::vector<Token> toks_;
  std::size_t pos_ = 0;
};

bool eval(const Node& n, const TriggerExpr::Bindings& b) {
  switch (n.kind) {
    case Node::Kind::And: return eval(*n.lhs, b) && eval(*n.rhs, b);
    case Node::Kind::Or: return eval(*n.lhs, b) || eval(*n.rhs, b);
    case Node::Kind::Not: return !eval(*n.lhs, b);
    case Node::Kind::HasFlag: return b.has_flag && b.has_flag(n.name);
    case Node::Kind::Compare: {
      const std::optional<double> v = b.signal ? b.signal(n.name) : std::nullopt;
      if (!v) return false;
      if (n.op == "<") return *v < n.value;
      if (n.op == "<=") return *v <= n.value;
      if (n.op == ">") return *v > n.value;
      if (n.op == ">=") return *v >= n.value;
      return std::fabs(*v - n.value) < 1e-9;
    }
  }
  return false;
}

}  // namespace

TriggerExpr TriggerExpr::parse(std::string_view text) {
  TriggerExpr e;
  e.text_ = std::string(text);
  e.root_ = Parser(tokenize(text)).run();
  return e;
}

bool TriggerExpr::evaluate(const Bindings& b) const { return eval(*root_, b); }

const std::vector<std::string>& TriggerExpr::signal_names() {
  static const std::vector<std::string> names = {
      "overall",        "evidence_completeness", "rule_coverage",     "citation_rate",
      "alternative_separation", "reasoning_quality", "outcome_certainty", "confidence",
      "warranted",
  };
  return names;
}

const std::vector<std::string>& TriggerExpr::flag_names() {
  static const std::vector<std::string> names = {"CD_MISMATCH", "VD_TENSION", "CONFIDENCE_DROP"};
  return names;
}

}  // namespace govdec
