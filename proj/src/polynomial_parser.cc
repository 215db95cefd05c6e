#include <cctype>
#include <charconv>

#include "safegame/polynomial.h"

namespace safegame::poly {
namespace {

// expr   := term (('+' | '-') term)*
// term   := unary ('*' unary)*
// unary  := '-' unary | '+' unary | power
// power  := primary ('^' integer)?
// primary:= number | identifier | '(' expr ')'
class Parser {
 public:
  Parser(std::string_view text, const Universe& u) : text_(text), u_(u) {}

  Polynomial parse() {
    Polynomial p = expr();
    skip_ws();
    if (pos_ != text_.size()) fail("unexpected character");
    return p;
  }

 private:
  [[noreturn]] void fail(const std::string& msg) const {
    throw PolyParseError(msg, pos_);
  }

  void skip_ws() {
    while (pos_ < text_.size() &&
           std::isspace(static_cast<unsigned char>(text_[pos_])))
      ++pos_;
  }

  bool accept(char c) {
    skip_ws();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  Polynomial expr() {
    Polynomial p = term();
    for (;;) {
      if (accept('+')) {
        p += term();
      } else if (accept('-')) {
        p -= term();
      } else {
        return p;
      }
    }
  }

  Polynomial term() {
    Polynomial p = unary();
    while (accept('*')) p = p * unary();
    return p;
  }

  Polynomial unary() {
    if (accept('-')) return -unary();
    if (accept('+')) return unary();
    return power();
  }

  Polynomial power() {
    Polynomial base = primary();
    if (!accept('^')) return base;
    skip_ws();
    const std::size_t start = pos_;
    int k = 0;
    auto res = std::from_chars(text_.data() + pos_,
                               text_.data() + text_.size(), k);
    if (res.ec != std::errc() || k < 0) fail("expected non-negative exponent");
    pos_ = res.ptr - text_.data();
    if (pos_ < text_.size() && text_[pos_] == '.') {
      pos_ = start;
      fail("exponent must be an integer");
    }
    return base.pow(k);
  }

  Polynomial primary() {
    skip_ws();
    if (pos_ >= text_.size()) fail("unexpected end of input");
    const char c = text_[pos_];
    if (c == '(') {
      ++pos_;
      Polynomial p = expr();
      if (!accept(')')) fail("expected ')'");
      return p;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      double v = 0.0;
      auto res = std::from_chars(text_.data() + pos_,
                                 text_.data() + text_.size(), v);
      if (res.ec != std::errc()) fail("malformed number");
      pos_ = res.ptr - text_.data();
      return Polynomial::constant(u_, v);
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      const std::size_t start = pos_;
      while (pos_ < text_.size() &&
             (std::isalnum(static_cast<unsigned char>(text_[pos_])) ||
              text_[pos_] == '_'))
        ++pos_;
      const std::string name(text_.substr(start, pos_ - start));
      for (const auto& v : *u_)
        if (v == name) return Polynomial::variable(u_, name);
      pos_ = start;
      fail("unknown variable '" + name + "'");
    }
    fail("unexpected character");
  }

  std::string_view text_;
  const Universe& u_;
  std::size_t pos_ = 0;
};

}  // namespace

Polynomial parse_polynomial(std::string_view text, const Universe& u) {
  if (!u) throw std::invalid_argument("parse_polynomial: null universe");
  return Parser(text, u).parse();
}

}  // namespace safegame::poly
