// Deterministic finite automata over single-proposition letters, LTLf
// translation by formula progression, and the bounded run / loop-bound
// enumeration used by the satisfaction bound.

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "safegame/formula.h"

namespace safegame::automaton {

/// Complete DFA. States are 0..num_states()-1 and state 0 is not special;
/// initial() names the start state.
class Dfa {
 public:
  Dfa() = default;
  Dfa(std::vector<std::string> alphabet, int num_states, int initial,
      std::vector<bool> accepting, std::vector<int> transitions,
      std::vector<std::string> descriptions = {});

  const std::vector<std::string>& alphabet() const { return alphabet_; }
  int num_states() const { return num_states_; }
  int initial() const { return initial_; }
  bool is_accepting(int q) const { return accepting_.at(q); }
  int next(int q, std::size_t letter) const {
    return transitions_[static_cast<std::size_t>(q) * alphabet_.size() + letter];
  }
  int next(int q, const std::string& letter) const {
    return next(q, letter_index(letter));
  }
  /// Throws std::invalid_argument for a letter outside the alphabet.
  std::size_t letter_index(const std::string& letter) const;

  std::string state_name(int q) const { return "q" + std::to_string(q); }
  /// Residual formula the state stands for, empty when unknown.
  const std::string& description(int q) const;

  bool has_self_loop(int q) const;
  std::size_t num_transitions() const { return transitions_.size(); }

  friend bool operator==(const Dfa& a, const Dfa& b);

 private:
  std::vector<std::string> alphabet_;
  int num_states_ = 0;
  int initial_ = 0;
  std::vector<bool> accepting_;
  std::vector<int> transitions_;  // row-major [state][letter]
  std::vector<std::string> descriptions_;
};

struct Run {
  std::vector<int> states;
  // letters[i] lists every letter that moves states[i] to states[i+1].
  std::vector<std::vector<std::string>> letters;

  std::size_t size() const { return states.size(); }
  friend bool operator==(const Run&, const Run&) = default;
};

struct TriplePath {
  int q = 0;
  int q_mid = 0;
  int q_end = 0;
  int loop_bound = 1;
  friend bool operator==(const TriplePath&, const TriplePath&) = default;
  friend auto operator<=>(const TriplePath&, const TriplePath&) = default;
};

struct DfaOptions {
  std::size_t max_states = 100000;
  bool minimize = true;
};

class StateBudgetExceeded : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Language: nonempty traces t with evaluate(f, t, 0).
Dfa ltlf_to_dfa(const formula::Formula& f,
                const std::vector<std::string>& alphabet,
                DfaOptions options = {});

/// Flips acceptance. Over nonempty words this is the complement language.
Dfa complement(const Dfa& d);

/// Hopcroft partition refinement followed by canonical breadth-first
/// renumbering (initial state becomes q0, letters visited in alphabet order).
Dfa minimize(const Dfa& d);

/// Drops unreachable states and renumbers breadth-first from the initial
/// state.
Dfa canonicalize(const Dfa& d);

bool accepts(const Dfa& d, const formula::Trace& t);

/// Accepting runs q0..qn with 1 <= n <= horizon and q_i != q_{i+1} for every
/// transition, found by depth-first search from the initial state.
std::vector<Run> enumerate_runs(const Dfa& d, int horizon);

/// Runs whose first transition can be taken on `letter`.
std::vector<Run> runs_from_label(const std::vector<Run>& runs,
                                 const std::string& letter);

/// Consecutive state triples of a run with their loop bounds. Runs with at
/// most two states give no triples.
std::vector<TriplePath> triple_paths(const Run& run, int horizon,
                                     const Dfa& d);

std::string to_dot(const Dfa& d);

}  // namespace safegame::automaton
