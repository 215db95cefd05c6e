// LTL over finite traces: AST, parser, positive normal form and the
// finite-trace semantics.
//
// Traces carry exactly one atomic proposition per position (labeling maps
// states to a single proposition), so the alphabet is the proposition set
// itself rather than its power set.

#pragma once

#include <cstddef>
#include <memory>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace safegame::formula {

enum class Kind {
  kTrue,
  kFalse,
  kAtom,
  kNot,
  kAnd,
  kOr,
  kNext,
  kWeakNext,  // internal dual of kNext, true at the last position
  kUntil,
  kRelease,   // internal dual of kUntil
  kAlways,
  kEventually,
};

class Formula;

namespace internal {
struct Node {
  Kind kind;
  std::string atom;
  std::shared_ptr<const Node> lhs;
  std::shared_ptr<const Node> rhs;
};
}  // namespace internal

/// Immutable formula handle. Copies share structure.
class Formula {
 public:
  static Formula True();
  static Formula False();
  static Formula Atom(std::string name);
  static Formula Not(Formula f);
  static Formula And(Formula a, Formula b);
  static Formula Or(Formula a, Formula b);
  static Formula Next(Formula f);
  static Formula WeakNext(Formula f);
  static Formula Until(Formula a, Formula b);
  static Formula Release(Formula a, Formula b);
  static Formula Always(Formula f);
  static Formula Eventually(Formula f);

  Kind kind() const { return node_->kind; }
  const std::string& atom() const { return node_->atom; }
  // Operand of a unary node, left operand of a binary node.
  Formula lhs() const { return Formula(node_->lhs); }
  Formula rhs() const { return Formula(node_->rhs); }

  bool is_unary() const;
  bool is_binary() const;

  std::size_t depth() const;
  std::set<std::string> atoms() const;

  /// Structural ordering; equal iff the trees are identical.
  friend int compare(const Formula& a, const Formula& b);
  friend bool operator==(const Formula& a, const Formula& b) {
    return compare(a, b) == 0;
  }
  friend bool operator<(const Formula& a, const Formula& b) {
    return compare(a, b) < 0;
  }

 private:
  explicit Formula(std::shared_ptr<const internal::Node> n)
      : node_(std::move(n)) {}
  static Formula Make(Kind k, std::string atom, Formula* lhs, Formula* rhs);

  std::shared_ptr<const internal::Node> node_;
};

using Trace = std::vector<std::string>;

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& msg, std::size_t position)
      : std::runtime_error(msg + " at position " + std::to_string(position)),
        position_(position) {}
  std::size_t position() const { return position_; }

 private:
  std::size_t position_;
};

struct ParseOptions {
  // Accept `N` (weak next) and `R` (release). These only appear in printed
  // normal forms and are not part of the user grammar.
  bool allow_internal = false;
};

/// Parses the concrete grammar
///   T, F, identifiers, !, &, |, X, G, F, U (infix), parentheses
/// with precedence unary > U > & > |. `&` and `|` associate to the left,
/// `U` to the right. Every identifier must belong to `props`; an empty
/// `props` accepts any identifier.
Formula parse(std::string_view text, const std::set<std::string>& props,
              ParseOptions options = {});

/// Prints with the minimal parenthesization that parse() reads back into the
/// identical tree.
std::string to_string(const Formula& f);

Formula to_pnf(const Formula& f);
Formula negate(const Formula& f);
bool is_safe_ltlf(const Formula& f);

/// Finite-trace satisfaction (eta, i) |= f. The until window is
/// j in [i, |eta|-1].
bool evaluate(const Formula& f, const Trace& trace, std::size_t i = 0);

/// Propositional formulas (no temporal operator) evaluated on one letter.
bool is_propositional(const Formula& f);
bool holds_on_letter(const Formula& f, const std::string& letter);

/// Letters that never violate a top-level `G psi` conjunct with
/// propositional psi. Returns the whole alphabet when no such conjunct
/// exists.
std::set<std::string> invariant_letters(const Formula& f,
                                        const std::vector<std::string>& alphabet);

/// Letters allowed at position 0 by the propositional top-level conjuncts.
std::set<std::string> initial_letters(const Formula& f,
                                      const std::vector<std::string>& alphabet);

}  // namespace safegame::formula
