#include <cctype>

#include "safegame/formula.h"

namespace safegame::formula {
namespace {

enum class Tok { kIdent, kBang, kAmp, kBar, kLParen, kRParen, kEnd };

struct Token {
  Tok type;
  std::string text;
  std::size_t pos;
};

std::vector<Token> tokenize(std::string_view s) {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < s.size()) {
    const char c = s[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
      continue;
    }
    if (std::isalpha(static_cast<unsigned char>(c))) {
      std::size_t j = i + 1;
      while (j < s.size() && (std::isalnum(static_cast<unsigned char>(s[j])) ||
                              s[j] == '_'))
        ++j;
      out.push_back({Tok::kIdent, std::string(s.substr(i, j - i)), i});
      i = j;
      continue;
    }
    Tok t;
    switch (c) {
      case '!': t = Tok::kBang; break;
      case '&': t = Tok::kAmp; break;
      case '|': t = Tok::kBar; break;
      case '(': t = Tok::kLParen; break;
      case ')': t = Tok::kRParen; break;
      default:
        throw ParseError(std::string("unexpected character '") + c + "'", i);
    }
    out.push_back({t, std::string(1, c), i});
    ++i;
  }
  out.push_back({Tok::kEnd, "", s.size()});
  return out;
}

class Parser {
 public:
  Parser(std::string_view text, const std::set<std::string>& props,
         ParseOptions opt)
      : toks_(tokenize(text)), props_(props), opt_(opt) {}

  Formula run() {
    Formula f = parse_or();
    if (peek().type != Tok::kEnd)
      throw ParseError("unexpected '" + peek().text + "'", peek().pos);
    return f;
  }

 private:
  const Token& peek(std::size_t k = 0) const {
    return toks_[std::min(pos_ + k, toks_.size() - 1)];
  }
  const Token& take() { return toks_[pos_++]; }

  bool is_keyword(const Token& t, const char* kw) const {
    return t.type == Tok::kIdent && t.text == kw;
  }
  bool is_internal(const std::string& s) const { return s == "N" || s == "R"; }

  // Whether the token can begin an operand.
  bool starts_operand(const Token& t) const {
    if (t.type == Tok::kBang || t.type == Tok::kLParen) return true;
    if (t.type != Tok::kIdent) return false;
    if (t.text == "U") return false;
    if (t.text == "R" && opt_.allow_internal) return false;
    return true;
  }

  Formula parse_or() {
    Formula f = parse_and();
    while (peek().type == Tok::kBar) {
      take();
      f = Formula::Or(f, parse_and());
    }
    return f;
  }

  Formula parse_and() {
    Formula f = parse_until();
    while (peek().type == Tok::kAmp) {
      take();
      f = Formula::And(f, parse_until());
    }
    return f;
  }

  Formula parse_until() {
    Formula f = parse_unary();
    if (is_keyword(peek(), "U")) {
      take();
      return Formula::Until(f, parse_until());
    }
    if (opt_.allow_internal && is_keyword(peek(), "R")) {
      take();
      return Formula::Release(f, parse_until());
    }
    return f;
  }

  Formula parse_unary() {
    const Token& t = peek();
    if (t.type == Tok::kBang) {
      take();
      return Formula::Not(parse_unary());
    }
    if (t.type == Tok::kIdent) {
      if (t.text == "X") {
        take();
        return Formula::Next(parse_unary());
      }
      if (t.text == "G") {
        take();
        return Formula::Always(parse_unary());
      }
      if (t.text == "F" && starts_operand(peek(1))) {
        take();
        return Formula::Eventually(parse_unary());
      }
      if (opt_.allow_internal && t.text == "N") {
        take();
        return Formula::WeakNext(parse_unary());
      }
    }
    return parse_primary();
  }

  Formula parse_primary() {
    const Token& t = take();
    switch (t.type) {
      case Tok::kLParen: {
        Formula f = parse_or();
        if (peek().type != Tok::kRParen)
          throw ParseError("expected ')'", peek().pos);
        take();
        return f;
      }
      case Tok::kIdent:
        if (t.text == "T") return Formula::True();
        if (t.text == "F") return Formula::False();
        if (t.text == "X" || t.text == "G" || t.text == "U")
          throw ParseError("operator '" + t.text + "' without operand", t.pos);
        if (is_internal(t.text))
          throw ParseError("reserved name '" + t.text + "'", t.pos);
        if (!props_.empty() && !props_.contains(t.text))
          throw ParseError("unknown proposition '" + t.text + "'", t.pos);
        return Formula::Atom(t.text);
      case Tok::kEnd:
        throw ParseError("unexpected end of input", t.pos);
      default:
        throw ParseError("unexpected '" + t.text + "'", t.pos);
    }
  }

  std::vector<Token> toks_;
  std::size_t pos_ = 0;
  const std::set<std::string>& props_;
  ParseOptions opt_;
};

// Binding strength; higher binds tighter.
int precedence(Kind k) {
  switch (k) {
    case Kind::kOr: return 1;
    case Kind::kAnd: return 2;
    case Kind::kUntil:
    case Kind::kRelease: return 3;
    case Kind::kNot:
    case Kind::kNext:
    case Kind::kWeakNext:
    case Kind::kAlways:
    case Kind::kEventually: return 4;
    default: return 5;
  }
}

void print(const Formula& f, int min_prec, std::string& out) {
  const int p = precedence(f.kind());
  const bool paren = p < min_prec;
  if (paren) out += '(';
  switch (f.kind()) {
    case Kind::kTrue: out += 'T'; break;
    case Kind::kFalse: out += 'F'; break;
    case Kind::kAtom: out += f.atom(); break;
    case Kind::kNot:
      out += '!';
      print(f.lhs(), 4, out);
      break;
    case Kind::kNext:
    case Kind::kWeakNext:
    case Kind::kAlways:
    case Kind::kEventually: {
      const char* op = f.kind() == Kind::kNext       ? "X "
                       : f.kind() == Kind::kWeakNext ? "N "
                       : f.kind() == Kind::kAlways   ? "G "
                                                     : "F ";
      out += op;
      print(f.lhs(), 4, out);
      break;
    }
    case Kind::kAnd:
      print(f.lhs(), 2, out);
      out += " & ";
      print(f.rhs(), 3, out);
      break;
    case Kind::kOr:
      print(f.lhs(), 1, out);
      out += " | ";
      print(f.rhs(), 2, out);
      break;
    case Kind::kUntil:
    case Kind::kRelease:
      print(f.lhs(), 4, out);
      out += f.kind() == Kind::kUntil ? " U " : " R ";
      print(f.rhs(), 3, out);
      break;
  }
  if (paren) out += ')';
}

}  // namespace

Formula parse(std::string_view text, const std::set<std::string>& props,
              ParseOptions options) {
  for (const auto& p : props) {
    if (p == "T" || p == "F" || p == "X" || p == "G" || p == "U" || p == "N" ||
        p == "R")
      throw std::invalid_argument("proposition name '" + p + "' is reserved");
  }
  return Parser(text, props, options).run();
}

std::string to_string(const Formula& f) {
  std::string out;
  print(f, 0, out);
  return out;
}

}  // namespace safegame::formula
