#include "ctstl/stl/parser.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <optional>

#include "ctstl/error.hpp"

namespace ctstl::stl {
namespace {

enum class Tok {
  Number, Ident, LParen, RParen, LBracket, RBracket, Comma,
  Plus, Minus, Star, Caret, Bang, Amp, Pipe, Arrow, Ge, Le, Gt, Lt, End
};

struct Token {
  Tok kind = Tok::End;
  std::string text;
  double number = 0.0;
  bool integral = false;
  std::size_t line = 1;
  std::size_t column = 1;
};

std::vector<Token> tokenize(std::string_view src) {
  std::vector<Token> out;
  std::size_t line = 1, col = 1, i = 0;
  auto advance = [&](std::size_t n) {
    for (std::size_t k = 0; k < n; ++k, ++i) {
      if (src[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
  };
  while (i < src.size()) {
    const char ch = src[i];
    if (std::isspace(static_cast<unsigned char>(ch))) {
      advance(1);
      continue;
    }
    Token t;
    t.line = line;
    t.column = col;
    auto two = [&](char a, char b) { return ch == a && i + 1 < src.size() && src[i + 1] == b; };
    if (std::isdigit(static_cast<unsigned char>(ch)) ||
        (ch == '.' && i + 1 < src.size() && std::isdigit(static_cast<unsigned char>(src[i + 1])))) {
      std::size_t j = i;
      bool integral = true;
      while (j < src.size() && std::isdigit(static_cast<unsigned char>(src[j]))) ++j;
      if (j < src.size() && src[j] == '.') {
        integral = false;
        ++j;
        while (j < src.size() && std::isdigit(static_cast<unsigned char>(src[j]))) ++j;
      }
      if (j < src.size() && (src[j] == 'e' || src[j] == 'E')) {
        std::size_t k = j + 1;
        if (k < src.size() && (src[k] == '+' || src[k] == '-')) ++k;
        if (k < src.size() && std::isdigit(static_cast<unsigned char>(src[k]))) {
          integral = false;
          j = k;
          while (j < src.size() && std::isdigit(static_cast<unsigned char>(src[j]))) ++j;
        }
      }
      t.kind = Tok::Number;
      t.text = std::string(src.substr(i, j - i));
      t.integral = integral;
      auto res = std::from_chars(t.text.data(), t.text.data() + t.text.size(), t.number);
      if (res.ec != std::errc()) throw ParseError("malformed number '" + t.text + "'", line, col);
      advance(j - i);
    } else if (std::isalpha(static_cast<unsigned char>(ch)) || ch == '_') {
      std::size_t j = i;
      while (j < src.size() &&
             (std::isalnum(static_cast<unsigned char>(src[j])) || src[j] == '_')) {
        ++j;
      }
      t.kind = Tok::Ident;
      t.text = std::string(src.substr(i, j - i));
      advance(j - i);
    } else if (two('-', '>')) {
      t.kind = Tok::Arrow;
      advance(2);
    } else if (two('>', '=')) {
      t.kind = Tok::Ge;
      advance(2);
    } else if (two('<', '=')) {
      t.kind = Tok::Le;
      advance(2);
    } else {
      switch (ch) {
        case '(': t.kind = Tok::LParen; break;
        case ')': t.kind = Tok::RParen; break;
        case '[': t.kind = Tok::LBracket; break;
        case ']': t.kind = Tok::RBracket; break;
        case ',': t.kind = Tok::Comma; break;
        case '+': t.kind = Tok::Plus; break;
        case '-': t.kind = Tok::Minus; break;
        case '*': t.kind = Tok::Star; break;
        case '^': t.kind = Tok::Caret; break;
        case '!': t.kind = Tok::Bang; break;
        case '&': t.kind = Tok::Amp; break;
        case '|': t.kind = Tok::Pipe; break;
        case '>': t.kind = Tok::Gt; break;
        case '<': t.kind = Tok::Lt; break;
        default:
          throw ParseError(std::string("unexpected character '") + ch + "'", line, col);
      }
      advance(1);
    }
    out.push_back(std::move(t));
  }
  Token end;
  end.kind = Tok::End;
  end.line = line;
  end.column = col;
  out.push_back(end);
  return out;
}

bool is_comparison(Tok t) { return t == Tok::Ge || t == Tok::Le || t == Tok::Gt || t == Tok::Lt; }

bool is_zero_literal(const PredicateExpr& e) {
  return e.op() == PredicateExpr::Op::Constant && e.constant_value() == 0.0;
}

class Parser {
 public:
  Parser(std::string_view text, const ChannelSet& channels, const ConstantTable& constants)
      : tokens_(tokenize(text)), channels_(channels), constants_(constants) {}

  Formula parse_formula_text() {
    Formula f = formula();
    expect_end();
    return f;
  }

  PredicateExpr parse_expression_text() {
    PredicateExpr e = expr();
    expect_end();
    return e;
  }

 private:
  const Token& peek(std::size_t ahead = 0) const {
    return tokens_[std::min(pos_ + ahead, tokens_.size() - 1)];
  }
  bool at(Tok k) const { return peek().kind == k; }
  bool at_keyword(std::string_view word) const {
    return peek().kind == Tok::Ident && peek().text == word && peek(1).kind == Tok::LBracket;
  }
  const Token& next() { return tokens_[pos_ < tokens_.size() - 1 ? pos_++ : pos_]; }

  [[noreturn]] void fail(const std::string& message, const Token& at) const {
    throw ParseError(message, at.line, at.column);
  }

  void expect(Tok k, const char* what) {
    if (!at(k)) fail(std::string("expected ") + what, peek());
    next();
  }

  void expect_end() {
    if (!at(Tok::End)) fail("unexpected trailing input", peek());
  }

  Formula formula() {
    Formula lhs = disjunction();
    if (at(Tok::Arrow)) {
      next();
      Formula rhs = formula();
      return Formula::implies(std::move(lhs), std::move(rhs));
    }
    return lhs;
  }

  Formula disjunction() {
    std::vector<Formula> items{conjunction()};
    while (at(Tok::Pipe)) {
      next();
      items.push_back(conjunction());
    }
    if (items.size() == 1) return items.front();
    return Formula::disjunction(std::move(items));
  }

  Formula conjunction() {
    std::vector<Formula> items{until()};
    while (at(Tok::Amp)) {
      next();
      items.push_back(until());
    }
    if (items.size() == 1) return items.front();
    return Formula::conjunction(std::move(items));
  }

  Formula until() {
    Formula lhs = unary();
    while (at_keyword("U")) {
      next();
      Interval w = window();
      Formula rhs = unary();
      lhs = Formula::until(w, std::move(lhs), std::move(rhs));
    }
    return lhs;
  }

  Formula unary() {
    if (at(Tok::Bang)) {
      next();
      return Formula::negation(unary());
    }
    if (at_keyword("G")) {
      next();
      Interval w = window();
      return Formula::always(w, unary());
    }
    if (at_keyword("F")) {
      next();
      Interval w = window();
      return Formula::eventually(w, unary());
    }
    return atom();
  }

  Formula atom() {
    if (at(Tok::LParen)) {
      // Either a parenthesized formula or the start of an arithmetic
      // expression like "(a + b) >= 0"; try the formula first.
      const std::size_t start = pos_;
      std::optional<ParseError> formula_error;
      try {
        next();
        Formula inner = formula();
        expect(Tok::RParen, "')'");
        const Tok following = peek().kind;
        if (!is_comparison(following) && following != Tok::Plus && following != Tok::Minus &&
            following != Tok::Star && following != Tok::Caret) {
          return inner;
        }
      } catch (const ParseError& e) {
        formula_error = e;
      }
      const std::size_t formula_reach = pos_;
      pos_ = start;
      try {
        return comparison();
      } catch (const ParseError& e) {
        // Report whichever reading got further into the input.
        if (formula_error && formula_reach > pos_) throw *formula_error;
        throw;
      }
    }
    return comparison();
  }

  Formula comparison() {
    PredicateExpr lhs = expr();
    const Token& op = peek();
    if (!is_comparison(op.kind)) fail("expected comparison operator", op);
    next();
    PredicateExpr rhs = expr();
    if (op.kind == Tok::Ge || op.kind == Tok::Gt) {
      return Formula::predicate(is_zero_literal(rhs) ? lhs : PredicateExpr::sub(lhs, rhs));
    }
    return Formula::predicate(is_zero_literal(lhs) ? rhs : PredicateExpr::sub(rhs, lhs));
  }

  double bound() {
    const Token& t = peek();
    if (t.kind == Tok::Number) {
      next();
      return t.number;
    }
    if (t.kind == Tok::Ident) {
      auto it = constants_.find(t.text);
      if (it == constants_.end()) fail("unknown constant '" + t.text + "' in interval", t);
      next();
      return it->second;
    }
    fail("expected interval bound", t);
  }

  Interval window() {
    const Token& open = peek();
    expect(Tok::LBracket, "'['");
    Interval w;
    w.lo = bound();
    expect(Tok::Comma, "','");
    w.hi = bound();
    expect(Tok::RBracket, "']'");
    if (w.lo < 0.0 || w.hi < 0.0) fail("interval endpoints must be nonnegative", open);
    if (w.lo > w.hi) fail("interval has a > b", open);
    return w;
  }

  PredicateExpr expr() {
    PredicateExpr lhs = term();
    while (at(Tok::Plus) || at(Tok::Minus)) {
      const bool plus = at(Tok::Plus);
      next();
      PredicateExpr rhs = term();
      lhs = plus ? PredicateExpr::add(lhs, rhs) : PredicateExpr::sub(lhs, rhs);
    }
    return lhs;
  }

  PredicateExpr term() {
    PredicateExpr lhs = factor();
    while (at(Tok::Star)) {
      next();
      lhs = PredicateExpr::mul(lhs, factor());
    }
    return lhs;
  }

  PredicateExpr factor() {
    if (at(Tok::Minus)) {
      // "-3" is a negative literal unless it is the base of a power.
      if (peek(1).kind == Tok::Number && peek(2).kind != Tok::Caret) {
        next();
        return PredicateExpr::constant(-next().number);
      }
      next();
      return PredicateExpr::neg(factor());
    }
    PredicateExpr base = primary();
    if (at(Tok::Caret)) {
      next();
      const Token& t = peek();
      if (t.kind != Tok::Number || !t.integral || t.number < 1.0 || t.number > 64.0) {
        fail("exponent must be an integer literal in [1, 64]", t);
      }
      next();
      return PredicateExpr::pow(base, static_cast<int>(t.number));
    }
    return base;
  }

  PredicateExpr primary() {
    const Token& t = peek();
    switch (t.kind) {
      case Tok::Number:
        next();
        return PredicateExpr::constant(t.number);
      case Tok::Ident: {
        next();
        if (auto c = constants_.find(t.text); c != constants_.end()) {
          return PredicateExpr::constant(c->second);
        }
        if (auto idx = channels_.find(t.text)) return PredicateExpr::channel(*idx, t.text);
        fail("unknown channel '" + t.text + "'", t);
      }
      case Tok::LParen: {
        next();
        PredicateExpr inner = expr();
        expect(Tok::RParen, "')'");
        return inner;
      }
      default:
        fail("expected number, channel or '('", t);
    }
  }

  std::vector<Token> tokens_;
  std::size_t pos_ = 0;
  const ChannelSet& channels_;
  const ConstantTable& constants_;
};

int precedence(const PredicateExpr& e) {
  using Op = PredicateExpr::Op;
  switch (e.op()) {
    case Op::Add:
    case Op::Sub: return 1;
    case Op::Mul: return 2;
    case Op::Neg: return 3;
    case Op::Pow: return 4;
    default: return 5;
  }
}

void append_expression(std::string& out, const PredicateExpr& e);

void append_wrapped(std::string& out, const PredicateExpr& e, bool wrap) {
  if (wrap) out += '(';
  append_expression(out, e);
  if (wrap) out += ')';
}

void append_expression(std::string& out, const PredicateExpr& e) {
  using Op = PredicateExpr::Op;
  switch (e.op()) {
    case Op::Constant: out += format_number(e.constant_value()); return;
    case Op::Channel: out += e.channel_name(); return;
    case Op::Add:
    case Op::Sub:
      append_wrapped(out, e.lhs(), precedence(e.lhs()) < 1);
      out += e.op() == Op::Add ? " + " : " - ";
      append_wrapped(out, e.rhs(), precedence(e.rhs()) <= 1);
      return;
    case Op::Mul:
      append_wrapped(out, e.lhs(), precedence(e.lhs()) < 2);
      out += " * ";
      append_wrapped(out, e.rhs(), precedence(e.rhs()) <= 2);
      return;
    case Op::Neg:
      out += '-';
      append_wrapped(out, e.lhs(),
                     precedence(e.lhs()) < 3 || e.lhs().op() == Op::Constant);
      return;
    case Op::Pow: {
      const auto& base = e.lhs();
      const bool plain = base.op() == Op::Channel ||
                         (base.op() == Op::Constant && !std::signbit(base.constant_value()));
      append_wrapped(out, base, !plain);
      out += '^';
      out += std::to_string(e.exponent());
      return;
    }
  }
}

void append_window(std::string& out, const Interval& w) {
  out += '[';
  out += format_number(w.lo);
  out += ',';
  out += format_number(w.hi);
  out += ']';
}

void append_formula(std::string& out, const Formula& f) {
  using Kind = Formula::Kind;
  auto join = [&](const char* sep) {
    out += '(';
    bool first = true;
    for (const auto& child : f.operands()) {
      if (!first) out += sep;
      first = false;
      append_formula(out, child);
    }
    out += ')';
  };
  switch (f.kind()) {
    case Kind::Predicate:
      out += '(';
      append_expression(out, f.predicate());
      out += " >= 0)";
      return;
    case Kind::Not:
      out += '!';
      append_formula(out, f.operands()[0]);
      return;
    case Kind::And: join(" & "); return;
    case Kind::Or: join(" | "); return;
    case Kind::Implies: join(" -> "); return;
    case Kind::Always:
    case Kind::Eventually:
      out += f.kind() == Kind::Always ? 'G' : 'F';
      append_window(out, f.window());
      out += ' ';
      append_formula(out, f.operands()[0]);
      return;
    case Kind::Until:
      out += '(';
      append_formula(out, f.operands()[0]);
      out += " U";
      append_window(out, f.window());
      out += ' ';
      append_formula(out, f.operands()[1]);
      out += ')';
      return;
  }
}

}  // namespace

Formula parse_formula(std::string_view text, const ChannelSet& channels,
                      const ConstantTable& constants) {
  if (channels.empty()) throw ChannelError("channel set is empty");
  return Parser(text, channels, constants).parse_formula_text();
}

PredicateExpr parse_expression(std::string_view text, const ChannelSet& channels,
                               const ConstantTable& constants) {
  return Parser(text, channels, constants).parse_expression_text();
}

std::string format_number(double value) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

std::string format_expression(const PredicateExpr& e) {
  std::string out;
  append_expression(out, e);
  return out;
}

std::string format_formula(const Formula& f) {
  std::string out;
  append_formula(out, f);
  return out;
}

}  // namespace ctstl::stl
