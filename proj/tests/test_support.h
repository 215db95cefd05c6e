// Test-only generators shared by the unit and acceptance suites.

#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "safegame/automaton.h"
#include "safegame/formula.h"
#include "safegame/model_io.h"

namespace safegame::testing {

inline std::vector<std::string> props(int n) {
  std::vector<std::string> out;
  for (int i = 0; i < n; ++i) out.push_back("a" + std::to_string(i));
  return out;
}

/// Every trace over `alphabet` with length in [1, max_len].
inline std::vector<formula::Trace> all_traces(
    const std::vector<std::string>& alphabet, int max_len) {
  std::vector<formula::Trace> out;
  std::vector<formula::Trace> layer{{}};
  for (int len = 1; len <= max_len; ++len) {
    std::vector<formula::Trace> next;
    for (const auto& t : layer) {
      for (const auto& a : alphabet) {
        auto u = t;
        u.push_back(a);
        next.push_back(u);
      }
    }
    out.insert(out.end(), next.begin(), next.end());
    layer = std::move(next);
  }
  return out;
}

/// Random user-syntax formula (no internal connectives) of depth <= max_depth.
inline formula::Formula random_formula(std::mt19937_64& rng,
                                       const std::vector<std::string>& alphabet,
                                       int max_depth) {
  using formula::Formula;
  std::uniform_int_distribution<int> pick(0, 9);
  const int choice = max_depth == 0 ? pick(rng) % 3 : pick(rng);
  auto sub = [&]() { return random_formula(rng, alphabet, max_depth - 1); };
  std::uniform_int_distribution<std::size_t> atom(0, alphabet.size() - 1);
  switch (choice) {
    case 0:
    case 1:
      return Formula::Atom(alphabet[atom(rng)]);
    case 2:
      return std::uniform_int_distribution<int>(0, 1)(rng) ? Formula::True()
                                                           : Formula::False();
    case 3:
      return Formula::Not(sub());
    case 4: {
      auto a = sub();
      return Formula::And(a, sub());
    }
    case 5: {
      auto a = sub();
      return Formula::Or(a, sub());
    }
    case 6:
      return Formula::Next(sub());
    case 7: {
      auto a = sub();
      return Formula::Until(a, sub());
    }
    case 8:
      return Formula::Always(sub());
    default:
      return Formula::Eventually(sub());
  }
}

inline std::string data_path(const std::string& name) {
  return std::string(SAFEGAME_DATA_DIR) + "/" + name;
}

/// The two-dimensional obstacle-avoidance game shipped in data/.
inline game::GameModel example_model() {
  return game::load_model(data_path("example_model.json"));
}

/// The example model with every dynamics component replaced by `text`.
inline game::GameModel with_dynamics(game::GameModel m,
                                     const std::vector<std::string>& text) {
  m.dynamics.clear();
  for (const auto& t : text) m.dynamics.push_back(m.parse(t));
  m.finalize();
  return m;
}

inline constexpr const char* kExampleFormula = "a0 & G !(a1 | a2 | a3)";

/// Minimal automaton of the negated example specification over a0..a4.
inline automaton::Dfa example_negated_dfa() {
  const auto phi = formula::parse(kExampleFormula, {});
  return automaton::ltlf_to_dfa(formula::negate(phi), props(5));
}

}  // namespace safegame::testing
