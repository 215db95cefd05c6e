#include "safegame/automaton.h"

#include <algorithm>
#include <deque>
#include <map>
#include <sstream>
#include <utility>

namespace safegame::automaton {

using formula::Formula;
using formula::Kind;

Dfa::Dfa(std::vector<std::string> alphabet, int num_states, int initial,
         std::vector<bool> accepting, std::vector<int> transitions,
         std::vector<std::string> descriptions)
    : alphabet_(std::move(alphabet)),
      num_states_(num_states),
      initial_(initial),
      accepting_(std::move(accepting)),
      transitions_(std::move(transitions)),
      descriptions_(std::move(descriptions)) {
  if (num_states_ <= 0) throw std::invalid_argument("Dfa: no states");
  if (alphabet_.empty()) throw std::invalid_argument("Dfa: empty alphabet");
  if (initial_ < 0 || initial_ >= num_states_)
    throw std::invalid_argument("Dfa: initial state out of range");
  if (accepting_.size() != static_cast<std::size_t>(num_states_))
    throw std::invalid_argument("Dfa: accepting vector size mismatch");
  if (transitions_.size() !=
      static_cast<std::size_t>(num_states_) * alphabet_.size())
    throw std::invalid_argument("Dfa: transition table is not total");
  for (int t : transitions_)
    if (t < 0 || t >= num_states_)
      throw std::invalid_argument("Dfa: transition target out of range");
  if (!descriptions_.empty() &&
      descriptions_.size() != static_cast<std::size_t>(num_states_))
    throw std::invalid_argument("Dfa: description count mismatch");
}

std::size_t Dfa::letter_index(const std::string& letter) const {
  auto it = std::find(alphabet_.begin(), alphabet_.end(), letter);
  if (it == alphabet_.end())
    throw std::invalid_argument("unknown letter '" + letter + "'");
  return static_cast<std::size_t>(it - alphabet_.begin());
}

const std::string& Dfa::description(int q) const {
  static const std::string kEmpty;
  if (descriptions_.empty()) return kEmpty;
  return descriptions_.at(q);
}

bool Dfa::has_self_loop(int q) const {
  for (std::size_t c = 0; c < alphabet_.size(); ++c)
    if (next(q, c) == q) return true;
  return false;
}

bool operator==(const Dfa& a, const Dfa& b) {
  return a.alphabet_ == b.alphabet_ && a.num_states_ == b.num_states_ &&
         a.initial_ == b.initial_ && a.accepting_ == b.accepting_ &&
         a.transitions_ == b.transitions_;
}

namespace {

using Clause = std::vector<int>;  // sorted literal ids, conjunction
using Dnf = std::vector<Clause>;  // disjunction; {} is false, {{}} is true

Clause merge_clauses(const Clause& a, const Clause& b) {
  Clause out;
  out.reserve(a.size() + b.size());
  std::set_union(a.begin(), a.end(), b.begin(), b.end(),
                 std::back_inserter(out));
  return out;
}

// Residual-formula progression over DNFs of PNF literals.
class Progression {
 public:
  explicit Progression(std::vector<std::string> alphabet)
      : alphabet_(std::move(alphabet)) {}

  Dnf dnf(const Formula& f) {
    switch (f.kind()) {
      case Kind::kTrue:
        return {Clause{}};
      case Kind::kFalse:
        return {};
      case Kind::kAnd:
        return conj(dnf(f.lhs()), dnf(f.rhs()));
      case Kind::kOr:
        return disj(dnf(f.lhs()), dnf(f.rhs()));
      default:
        return simplify({Clause{literal(f)}});
    }
  }

  Dnf progress(const Dnf& d, std::size_t letter) {
    Dnf out;
    for (const auto& clause : d) {
      Dnf acc{Clause{}};
      for (int lit : clause) {
        acc = conj(acc, progress_literal(lit, letter));
        if (acc.empty()) break;
      }
      out = disj(out, acc);
    }
    return out;
  }

  // Whether the residual holds on the one-letter trace (letter).
  bool holds_last(const Dnf& d, std::size_t letter) {
    for (const auto& clause : d) {
      bool all = true;
      for (int lit : clause) {
        if (!last_literal(lit, letter)) {
          all = false;
          break;
        }
      }
      if (all) return true;
    }
    return false;
  }

  std::string describe(const Dnf& d) const {
    if (d.empty()) return "F";
    std::string out;
    for (std::size_t i = 0; i < d.size(); ++i) {
      if (i > 0) out += " | ";
      if (d[i].empty()) {
        out += "T";
        continue;
      }
      if (d.size() > 1 && d[i].size() > 1) out += "(";
      for (std::size_t j = 0; j < d[i].size(); ++j) {
        if (j > 0) out += " & ";
        const Formula& lit = literals_[d[i][j]];
        const bool wrap = lit.is_binary() && (d[i].size() > 1 || d.size() > 1);
        if (wrap) out += "(";
        out += formula::to_string(lit);
        if (wrap) out += ")";
      }
      if (d.size() > 1 && d[i].size() > 1) out += ")";
    }
    return out;
  }

 private:
  int literal(const Formula& f) {
    auto [it, inserted] = ids_.try_emplace(f, static_cast<int>(literals_.size()));
    if (inserted) {
      literals_.push_back(f);
      const bool neg = f.kind() == Kind::kNot;
      atom_of_.push_back(neg ? f.lhs().atom()
                             : (f.kind() == Kind::kAtom ? f.atom() : ""));
      polarity_.push_back(f.kind() == Kind::kAtom ? 1 : (neg ? -1 : 0));
    }
    return it->second;
  }

  Dnf conj(const Dnf& a, const Dnf& b) {
    Dnf out;
    for (const auto& x : a)
      for (const auto& y : b) out.push_back(merge_clauses(x, y));
    return simplify(std::move(out));
  }

  Dnf disj(const Dnf& a, const Dnf& b) {
    Dnf out = a;
    out.insert(out.end(), b.begin(), b.end());
    return simplify(std::move(out));
  }

  // Exactly one proposition holds per position: two distinct positive atoms
  // are contradictory and a positive atom subsumes every other negative one.
  bool reduce_clause(Clause& c) const {
    const std::string* positive = nullptr;
    std::size_t negatives = 0;
    for (int lit : c) {
      if (polarity_[lit] == 1) {
        if (positive != nullptr && *positive != atom_of_[lit]) return false;
        positive = &atom_of_[lit];
      }
    }
    Clause kept;
    std::vector<bool> negated(alphabet_.size(), false);
    for (int lit : c) {
      if (polarity_[lit] == -1) {
        if (positive != nullptr) {
          if (atom_of_[lit] == *positive) return false;
          continue;
        }
        auto it = std::find(alphabet_.begin(), alphabet_.end(), atom_of_[lit]);
        if (it != alphabet_.end()) {
          auto idx = static_cast<std::size_t>(it - alphabet_.begin());
          if (!negated[idx]) ++negatives;
          negated[idx] = true;
        }
      }
      kept.push_back(lit);
    }
    if (positive != nullptr) {
      auto it = std::find(alphabet_.begin(), alphabet_.end(), *positive);
      if (it == alphabet_.end()) return false;
    }
    if (negatives == alphabet_.size()) return false;
    c = std::move(kept);
    return true;
  }

  Dnf simplify(Dnf d) {
    Dnf reduced;
    reduced.reserve(d.size());
    for (auto& c : d) {
      std::sort(c.begin(), c.end());
      c.erase(std::unique(c.begin(), c.end()), c.end());
      if (reduce_clause(c)) reduced.push_back(std::move(c));
    }
    std::sort(reduced.begin(), reduced.end(),
              [](const Clause& a, const Clause& b) {
                return a.size() != b.size() ? a.size() < b.size() : a < b;
              });
    reduced.erase(std::unique(reduced.begin(), reduced.end()), reduced.end());
    // Absorption: drop clauses implied by a smaller one.
    Dnf out;
    for (auto& c : reduced) {
      bool absorbed = false;
      for (const auto& k : out) {
        if (std::includes(c.begin(), c.end(), k.begin(), k.end())) {
          absorbed = true;
          break;
        }
      }
      if (!absorbed) out.push_back(std::move(c));
    }
    std::sort(out.begin(), out.end());
    return out;
  }

  const Dnf& progress_literal(int lit, std::size_t letter) {
    const auto key = std::make_pair(lit, letter);
    if (auto it = prog_cache_.find(key); it != prog_cache_.end())
      return it->second;
    const Formula f = literals_[lit];
    const Dnf self{Clause{lit}};
    Dnf r;
    switch (f.kind()) {
      case Kind::kAtom:
        r = f.atom() == alphabet_[letter] ? Dnf{Clause{}} : Dnf{};
        break;
      case Kind::kNot:
        r = f.lhs().atom() != alphabet_[letter] ? Dnf{Clause{}} : Dnf{};
        break;
      case Kind::kNext:
      case Kind::kWeakNext:
        r = dnf(f.lhs());
        break;
      case Kind::kAlways:
        r = conj(progress(dnf(f.lhs()), letter), self);
        break;
      case Kind::kEventually:
        r = disj(progress(dnf(f.lhs()), letter), self);
        break;
      case Kind::kUntil:
        r = disj(progress(dnf(f.rhs()), letter),
                 conj(progress(dnf(f.lhs()), letter), self));
        break;
      case Kind::kRelease:
        r = conj(progress(dnf(f.rhs()), letter),
                 disj(progress(dnf(f.lhs()), letter), self));
        break;
      default:
        throw std::logic_error("progression on non-literal");
    }
    return prog_cache_.emplace(key, std::move(r)).first->second;
  }

  bool last_literal(int lit, std::size_t letter) {
    const auto key = std::make_pair(lit, letter);
    if (auto it = last_cache_.find(key); it != last_cache_.end())
      return it->second;
    const Formula f = literals_[lit];
    bool r = false;
    switch (f.kind()) {
      case Kind::kAtom:
        r = f.atom() == alphabet_[letter];
        break;
      case Kind::kNot:
        r = f.lhs().atom() != alphabet_[letter];
        break;
      case Kind::kNext:
        r = false;
        break;
      case Kind::kWeakNext:
        r = true;
        break;
      case Kind::kAlways:
      case Kind::kEventually:
        r = holds_last(dnf(f.lhs()), letter);
        break;
      case Kind::kUntil:
      case Kind::kRelease:
        r = holds_last(dnf(f.rhs()), letter);
        break;
      default:
        throw std::logic_error("last-position check on non-literal");
    }
    last_cache_.emplace(key, r);
    return r;
  }

  std::vector<std::string> alphabet_;
  std::vector<Formula> literals_;
  std::vector<std::string> atom_of_;
  std::vector<int> polarity_;
  std::map<Formula, int> ids_;
  std::map<std::pair<int, std::size_t>, Dnf> prog_cache_;
  std::map<std::pair<int, std::size_t>, bool> last_cache_;
};

Dfa with_initial_acceptance(const Dfa& d, bool accepting) {
  std::vector<bool> acc(d.num_states());
  std::vector<int> trans(d.num_transitions());
  std::vector<std::string> desc(d.num_states());
  for (int q = 0; q < d.num_states(); ++q) {
    acc[q] = d.is_accepting(q);
    desc[q] = d.description(q);
    for (std::size_t c = 0; c < d.alphabet().size(); ++c)
      trans[q * d.alphabet().size() + c] = d.next(q, c);
  }
  acc[d.initial()] = accepting;
  return Dfa(d.alphabet(), d.num_states(), d.initial(), std::move(acc),
             std::move(trans), std::move(desc));
}

}  // namespace

Dfa canonicalize(const Dfa& d) {
  const std::size_t k = d.alphabet().size();
  std::vector<int> order;
  std::vector<int> index(d.num_states(), -1);
  std::deque<int> queue{d.initial()};
  index[d.initial()] = 0;
  order.push_back(d.initial());
  while (!queue.empty()) {
    const int q = queue.front();
    queue.pop_front();
    for (std::size_t c = 0; c < k; ++c) {
      const int t = d.next(q, c);
      if (index[t] < 0) {
        index[t] = static_cast<int>(order.size());
        order.push_back(t);
        queue.push_back(t);
      }
    }
  }
  const int n = static_cast<int>(order.size());
  std::vector<bool> acc(n);
  std::vector<int> trans(static_cast<std::size_t>(n) * k);
  std::vector<std::string> desc;
  for (int i = 0; i < n; ++i) {
    const int q = order[i];
    acc[i] = d.is_accepting(q);
    desc.push_back(d.description(q));
    for (std::size_t c = 0; c < k; ++c) trans[i * k + c] = index[d.next(q, c)];
  }
  return Dfa(d.alphabet(), n, 0, std::move(acc), std::move(trans),
             std::move(desc));
}

Dfa minimize(const Dfa& input) {
  const Dfa d = canonicalize(input);
  const int n = d.num_states();
  const std::size_t k = d.alphabet().size();

  // Inverse transition lists per letter.
  std::vector<std::vector<std::vector<int>>> preds(
      k, std::vector<std::vector<int>>(n));
  for (int q = 0; q < n; ++q)
    for (std::size_t c = 0; c < k; ++c) preds[c][d.next(q, c)].push_back(q);

  std::vector<int> block(n);
  std::vector<std::vector<int>> blocks;
  {
    std::vector<int> acc, rej;
    for (int q = 0; q < n; ++q) (d.is_accepting(q) ? acc : rej).push_back(q);
    if (!acc.empty()) blocks.push_back(acc);
    if (!rej.empty()) blocks.push_back(rej);
    for (std::size_t b = 0; b < blocks.size(); ++b)
      for (int q : blocks[b]) block[q] = static_cast<int>(b);
  }
  std::vector<std::pair<int, std::size_t>> work;
  std::vector<std::vector<bool>> in_work;
  auto ensure_flags = [&]() {
    while (in_work.size() < blocks.size()) in_work.emplace_back(k, false);
  };
  ensure_flags();
  if (blocks.size() == 2) {
    const int smaller = blocks[0].size() <= blocks[1].size() ? 0 : 1;
    for (std::size_t c = 0; c < k; ++c) {
      work.emplace_back(smaller, c);
      in_work[smaller][c] = true;
    }
  }

  std::vector<int> marked_count;
  std::vector<bool> marked(n, false);
  while (!work.empty()) {
    const auto [splitter, c] = work.back();
    work.pop_back();
    in_work[splitter][c] = false;

    std::vector<int> hit;
    for (int t : blocks[splitter])
      for (int s : preds[c][t])
        if (!marked[s]) {
          marked[s] = true;
          hit.push_back(s);
        }
    marked_count.assign(blocks.size(), 0);
    std::vector<int> touched;
    for (int s : hit) {
      if (marked_count[block[s]]++ == 0) touched.push_back(block[s]);
    }
    for (int b : touched) {
      if (marked_count[b] == static_cast<int>(blocks[b].size())) continue;
      std::vector<int> in, out;
      for (int q : blocks[b]) (marked[q] ? in : out).push_back(q);
      const int nb = static_cast<int>(blocks.size());
      blocks[b] = std::move(in);
      blocks.push_back(std::move(out));
      for (int q : blocks[nb]) block[q] = nb;
      ensure_flags();
      for (std::size_t a = 0; a < k; ++a) {
        if (in_work[b][a]) {
          work.emplace_back(nb, a);
          in_work[nb][a] = true;
        } else {
          const int smaller =
              blocks[b].size() <= blocks[nb].size() ? b : nb;
          work.emplace_back(smaller, a);
          in_work[smaller][a] = true;
        }
      }
    }
    for (int s : hit) marked[s] = false;
  }

  const int m = static_cast<int>(blocks.size());
  std::vector<bool> acc(m);
  std::vector<int> trans(static_cast<std::size_t>(m) * k);
  std::vector<std::string> desc(m);
  for (int b = 0; b < m; ++b) {
    const int rep = *std::min_element(blocks[b].begin(), blocks[b].end());
    acc[b] = d.is_accepting(rep);
    desc[b] = d.description(rep);
    for (std::size_t c = 0; c < k; ++c) trans[b * k + c] = block[d.next(rep, c)];
  }
  return canonicalize(Dfa(d.alphabet(), m, block[d.initial()], std::move(acc),
                          std::move(trans), std::move(desc)));
}

Dfa ltlf_to_dfa(const Formula& f, const std::vector<std::string>& alphabet,
                DfaOptions options) {
  if (alphabet.empty()) throw std::invalid_argument("ltlf_to_dfa: empty alphabet");
  for (const auto& a : f.atoms())
    if (std::find(alphabet.begin(), alphabet.end(), a) == alphabet.end())
      throw std::invalid_argument("ltlf_to_dfa: atom '" + a +
                                  "' not in alphabet");

  Progression prog(alphabet);
  const std::size_t k = alphabet.size();
  // Key = residual plus acceptance of the word read so far; the initial
  // state gets a marker of its own so no nonempty word can lead back to it.
  using Key = std::pair<Dnf, int>;
  std::map<Key, int> ids;
  std::vector<Key> keys;
  std::vector<int> trans;
  auto intern = [&](Key key) {
    auto [it, inserted] = ids.try_emplace(key, static_cast<int>(keys.size()));
    if (inserted) {
      if (keys.size() >= options.max_states)
        throw StateBudgetExceeded("ltlf_to_dfa: more than " +
                                  std::to_string(options.max_states) +
                                  " states");
      keys.push_back(std::move(key));
    }
    return it->second;
  };
  intern({prog.dnf(formula::to_pnf(f)), 2});
  for (std::size_t q = 0; q < keys.size(); ++q) {
    const Dnf residual = keys[q].first;
    for (std::size_t c = 0; c < k; ++c) {
      Key next{prog.progress(residual, c), prog.holds_last(residual, c) ? 1 : 0};
      const int id = intern(std::move(next));
      trans.push_back(id);
    }
  }
  const int n = static_cast<int>(keys.size());
  std::vector<bool> acc(n);
  std::vector<std::string> desc(n);
  for (int q = 0; q < n; ++q) {
    acc[q] = keys[q].second == 1;
    desc[q] = prog.describe(keys[q].first);
  }
  Dfa raw(alphabet, n, 0, std::move(acc), std::move(trans), std::move(desc));
  if (!options.minimize) return canonicalize(raw);

  // The empty word is outside the language, so the initial state's
  // acceptance is free; keep whichever choice minimizes further.
  Dfa rejecting = minimize(raw);
  Dfa accepting = minimize(with_initial_acceptance(raw, true));
  return accepting.num_states() < rejecting.num_states() ? accepting
                                                         : rejecting;
}

Dfa complement(const Dfa& d) {
  std::vector<bool> acc(d.num_states());
  std::vector<int> trans(d.num_transitions());
  std::vector<std::string> desc(d.num_states());
  const std::size_t k = d.alphabet().size();
  for (int q = 0; q < d.num_states(); ++q) {
    acc[q] = !d.is_accepting(q);
    desc[q] = d.description(q).empty() ? "" : "!(" + d.description(q) + ")";
    for (std::size_t c = 0; c < k; ++c) trans[q * k + c] = d.next(q, c);
  }
  return Dfa(d.alphabet(), d.num_states(), d.initial(), std::move(acc),
             std::move(trans), std::move(desc));
}

bool accepts(const Dfa& d, const formula::Trace& t) {
  if (t.empty()) throw std::invalid_argument("accepts: empty trace");
  int q = d.initial();
  for (const auto& letter : t) q = d.next(q, letter);
  return d.is_accepting(q);
}

std::vector<Run> enumerate_runs(const Dfa& d, int horizon) {
  if (horizon < 1) throw std::invalid_argument("enumerate_runs: horizon < 1");
  const std::size_t k = d.alphabet().size();
  // Successors grouped by target state, in state order.
  std::vector<std::vector<std::pair<int, std::vector<std::string>>>> succ(
      d.num_states());
  for (int q = 0; q < d.num_states(); ++q) {
    std::map<int, std::vector<std::string>> by_target;
    for (std::size_t c = 0; c < k; ++c) {
      const int t = d.next(q, c);
      if (t != q) by_target[t].push_back(d.alphabet()[c]);
    }
    for (auto& [t, letters] : by_target) succ[q].emplace_back(t, letters);
  }

  std::vector<Run> out;
  Run path;
  path.states.push_back(d.initial());
  auto dfs = [&](auto&& self) -> void {
    const int q = path.states.back();
    const int n = static_cast<int>(path.states.size()) - 1;
    if (n >= 1 && d.is_accepting(q)) out.push_back(path);
    if (n == horizon) return;
    for (const auto& [t, letters] : succ[q]) {
      path.states.push_back(t);
      path.letters.push_back(letters);
      self(self);
      path.states.pop_back();
      path.letters.pop_back();
    }
  };
  dfs(dfs);
  return out;
}

std::vector<Run> runs_from_label(const std::vector<Run>& runs,
                                 const std::string& letter) {
  std::vector<Run> out;
  for (const auto& r : runs) {
    if (r.letters.empty()) continue;
    const auto& first = r.letters.front();
    if (std::find(first.begin(), first.end(), letter) != first.end())
      out.push_back(r);
  }
  return out;
}

std::vector<TriplePath> triple_paths(const Run& run, int horizon,
                                     const Dfa& d) {
  std::vector<TriplePath> out;
  const int len = static_cast<int>(run.size());
  if (len <= 2) return out;
  for (int i = 0; i + 2 < len; ++i) {
    TriplePath t;
    t.q = run.states[i];
    t.q_mid = run.states[i + 1];
    t.q_end = run.states[i + 2];
    t.loop_bound = d.has_self_loop(t.q_mid) ? horizon + 2 - len : 1;
    if (std::find(out.begin(), out.end(), t) == out.end()) out.push_back(t);
  }
  return out;
}

std::string to_dot(const Dfa& d) {
  std::ostringstream os;
  os << "digraph dfa {\n  rankdir=LR;\n  init [shape=point];\n";
  for (int q = 0; q < d.num_states(); ++q) {
    os << "  " << d.state_name(q) << " [shape="
       << (d.is_accepting(q) ? "doublecircle" : "circle");
    if (!d.description(q).empty()) {
      std::string tip = d.description(q);
      std::string escaped;
      for (char ch : tip) {
        if (ch == '"') escaped += '\\';
        escaped += ch;
      }
      os << ", tooltip=\"" << escaped << "\"";
    }
    os << "];\n";
  }
  os << "  init -> " << d.state_name(d.initial()) << ";\n";
  const std::size_t k = d.alphabet().size();
  for (int q = 0; q < d.num_states(); ++q) {
    std::map<int, std::vector<std::string>> by_target;
    for (std::size_t c = 0; c < k; ++c)
      by_target[d.next(q, c)].push_back(d.alphabet()[c]);
    for (const auto& [t, letters] : by_target) {
      os << "  " << d.state_name(q) << " -> " << d.state_name(t)
         << " [label=\"";
      for (std::size_t i = 0; i < letters.size(); ++i)
        os << (i ? "," : "") << letters[i];
      os << "\"];\n";
    }
  }
  os << "}\n";
  return os.str();
}

}  // namespace safegame::automaton
