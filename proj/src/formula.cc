#include "safegame/formula.h"

#include <algorithm>
#include <stdexcept>

namespace safegame::formula {

Formula Formula::Make(Kind k, std::string atom, Formula* lhs, Formula* rhs) {
  auto n = std::make_shared<internal::Node>();
  n->kind = k;
  n->atom = std::move(atom);
  if (lhs != nullptr) n->lhs = lhs->node_;
  if (rhs != nullptr) n->rhs = rhs->node_;
  return Formula(std::move(n));
}

Formula Formula::True() { return Make(Kind::kTrue, {}, nullptr, nullptr); }
Formula Formula::False() { return Make(Kind::kFalse, {}, nullptr, nullptr); }
Formula Formula::Atom(std::string name) {
  if (name.empty()) throw std::invalid_argument("empty proposition name");
  return Make(Kind::kAtom, std::move(name), nullptr, nullptr);
}
Formula Formula::Not(Formula f) { return Make(Kind::kNot, {}, &f, nullptr); }
Formula Formula::And(Formula a, Formula b) {
  return Make(Kind::kAnd, {}, &a, &b);
}
Formula Formula::Or(Formula a, Formula b) { return Make(Kind::kOr, {}, &a, &b); }
Formula Formula::Next(Formula f) { return Make(Kind::kNext, {}, &f, nullptr); }
Formula Formula::WeakNext(Formula f) {
  return Make(Kind::kWeakNext, {}, &f, nullptr);
}
Formula Formula::Until(Formula a, Formula b) {
  return Make(Kind::kUntil, {}, &a, &b);
}
Formula Formula::Release(Formula a, Formula b) {
  return Make(Kind::kRelease, {}, &a, &b);
}
Formula Formula::Always(Formula f) {
  return Make(Kind::kAlways, {}, &f, nullptr);
}
Formula Formula::Eventually(Formula f) {
  return Make(Kind::kEventually, {}, &f, nullptr);
}

bool Formula::is_unary() const {
  switch (kind()) {
    case Kind::kNot:
    case Kind::kNext:
    case Kind::kWeakNext:
    case Kind::kAlways:
    case Kind::kEventually:
      return true;
    default:
      return false;
  }
}

bool Formula::is_binary() const {
  switch (kind()) {
    case Kind::kAnd:
    case Kind::kOr:
    case Kind::kUntil:
    case Kind::kRelease:
      return true;
    default:
      return false;
  }
}

std::size_t Formula::depth() const {
  if (is_unary()) return 1 + lhs().depth();
  if (is_binary()) return 1 + std::max(lhs().depth(), rhs().depth());
  return 0;
}

std::set<std::string> Formula::atoms() const {
  std::set<std::string> out;
  if (kind() == Kind::kAtom) {
    out.insert(atom());
  } else if (is_unary()) {
    out = lhs().atoms();
  } else if (is_binary()) {
    out = lhs().atoms();
    out.merge(rhs().atoms());
  }
  return out;
}

int compare(const Formula& a, const Formula& b) {
  if (a.node_ == b.node_) return 0;
  if (a.kind() != b.kind()) return a.kind() < b.kind() ? -1 : 1;
  if (a.kind() == Kind::kAtom) return a.atom().compare(b.atom());
  if (a.is_unary()) return compare(a.lhs(), b.lhs());
  if (a.is_binary()) {
    const int c = compare(a.lhs(), b.lhs());
    return c != 0 ? c : compare(a.rhs(), b.rhs());
  }
  return 0;
}

namespace {

// Pushes a pending negation down to the atoms.
Formula pnf(const Formula& f, bool negated) {
  using F = Formula;
  switch (f.kind()) {
    case Kind::kTrue:
      return negated ? F::False() : f;
    case Kind::kFalse:
      return negated ? F::True() : f;
    case Kind::kAtom:
      return negated ? F::Not(f) : f;
    case Kind::kNot:
      return pnf(f.lhs(), !negated);
    case Kind::kAnd:
      return negated ? F::Or(pnf(f.lhs(), true), pnf(f.rhs(), true))
                     : F::And(pnf(f.lhs(), false), pnf(f.rhs(), false));
    case Kind::kOr:
      return negated ? F::And(pnf(f.lhs(), true), pnf(f.rhs(), true))
                     : F::Or(pnf(f.lhs(), false), pnf(f.rhs(), false));
    case Kind::kNext:
      return negated ? F::WeakNext(pnf(f.lhs(), true))
                     : F::Next(pnf(f.lhs(), false));
    case Kind::kWeakNext:
      return negated ? F::Next(pnf(f.lhs(), true))
                     : F::WeakNext(pnf(f.lhs(), false));
    case Kind::kUntil:
      return negated ? F::Release(pnf(f.lhs(), true), pnf(f.rhs(), true))
                     : F::Until(pnf(f.lhs(), false), pnf(f.rhs(), false));
    case Kind::kRelease:
      return negated ? F::Until(pnf(f.lhs(), true), pnf(f.rhs(), true))
                     : F::Release(pnf(f.lhs(), false), pnf(f.rhs(), false));
    case Kind::kAlways:
      return negated ? F::Eventually(pnf(f.lhs(), true))
                     : F::Always(pnf(f.lhs(), false));
    case Kind::kEventually:
      return negated ? F::Always(pnf(f.lhs(), true))
                     : F::Eventually(pnf(f.lhs(), false));
  }
  throw std::logic_error("unhandled formula kind");
}

bool safe_pnf(const Formula& f) {
  switch (f.kind()) {
    case Kind::kTrue:
    case Kind::kFalse:
    case Kind::kAtom:
      return true;
    case Kind::kNot:
      return f.lhs().kind() == Kind::kAtom;
    case Kind::kAnd:
    case Kind::kOr:
      return safe_pnf(f.lhs()) && safe_pnf(f.rhs());
    case Kind::kNext:
    case Kind::kAlways:
      return safe_pnf(f.lhs());
    default:
      return false;
  }
}

void collect_conjuncts(const Formula& f, std::vector<Formula>& out) {
  if (f.kind() == Kind::kAnd) {
    collect_conjuncts(f.lhs(), out);
    collect_conjuncts(f.rhs(), out);
  } else {
    out.push_back(f);
  }
}

}  // namespace

Formula to_pnf(const Formula& f) { return pnf(f, false); }

Formula negate(const Formula& f) { return pnf(f, true); }

bool is_safe_ltlf(const Formula& f) { return safe_pnf(to_pnf(f)); }

bool evaluate(const Formula& f, const Trace& trace, std::size_t i) {
  const std::size_t n = trace.size();
  if (n == 0) throw std::invalid_argument("evaluate: empty trace");
  if (i >= n) throw std::out_of_range("evaluate: position out of range");
  switch (f.kind()) {
    case Kind::kTrue:
      return true;
    case Kind::kFalse:
      return false;
    case Kind::kAtom:
      return trace[i] == f.atom();
    case Kind::kNot:
      return !evaluate(f.lhs(), trace, i);
    case Kind::kAnd:
      return evaluate(f.lhs(), trace, i) && evaluate(f.rhs(), trace, i);
    case Kind::kOr:
      return evaluate(f.lhs(), trace, i) || evaluate(f.rhs(), trace, i);
    case Kind::kNext:
      return i + 1 < n && evaluate(f.lhs(), trace, i + 1);
    case Kind::kWeakNext:
      return i + 1 >= n || evaluate(f.lhs(), trace, i + 1);
    case Kind::kUntil:
      for (std::size_t j = i; j < n; ++j) {
        if (evaluate(f.rhs(), trace, j)) return true;
        if (!evaluate(f.lhs(), trace, j)) return false;
      }
      return false;
    case Kind::kRelease:
      // not (not a U not b)
      for (std::size_t j = i; j < n; ++j) {
        if (!evaluate(f.rhs(), trace, j)) return false;
        if (evaluate(f.lhs(), trace, j)) return true;
      }
      return true;
    case Kind::kAlways:
      for (std::size_t j = i; j < n; ++j)
        if (!evaluate(f.lhs(), trace, j)) return false;
      return true;
    case Kind::kEventually:
      for (std::size_t j = i; j < n; ++j)
        if (evaluate(f.lhs(), trace, j)) return true;
      return false;
  }
  throw std::logic_error("unhandled formula kind");
}

bool is_propositional(const Formula& f) {
  switch (f.kind()) {
    case Kind::kTrue:
    case Kind::kFalse:
    case Kind::kAtom:
      return true;
    case Kind::kNot:
      return is_propositional(f.lhs());
    case Kind::kAnd:
    case Kind::kOr:
      return is_propositional(f.lhs()) && is_propositional(f.rhs());
    default:
      return false;
  }
}

bool holds_on_letter(const Formula& f, const std::string& letter) {
  if (!is_propositional(f))
    throw std::invalid_argument("holds_on_letter: temporal formula");
  return evaluate(f, Trace{letter}, 0);
}

std::set<std::string> invariant_letters(
    const Formula& f, const std::vector<std::string>& alphabet) {
  std::set<std::string> safe(alphabet.begin(), alphabet.end());
  std::vector<Formula> conj;
  collect_conjuncts(to_pnf(f), conj);
  for (const auto& c : conj) {
    if (c.kind() != Kind::kAlways || !is_propositional(c.lhs())) continue;
    for (const auto& a : alphabet)
      if (!holds_on_letter(c.lhs(), a)) safe.erase(a);
  }
  return safe;
}

std::set<std::string> initial_letters(
    const Formula& f, const std::vector<std::string>& alphabet) {
  std::set<std::string> ok(alphabet.begin(), alphabet.end());
  std::vector<Formula> conj;
  collect_conjuncts(to_pnf(f), conj);
  for (const auto& c : conj) {
    if (!is_propositional(c)) continue;
    for (const auto& a : alphabet)
      if (!holds_on_letter(c, a)) ok.erase(a);
  }
  return ok;
}

}  // namespace safegame::formula
