// Grid dynamic programming for the max-min probability of keeping a finite
// trace inside a specification.

#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "safegame/automaton.h"
#include "safegame/formula.h"
#include "safegame/game.h"
#include "safegame/kernels.h"

namespace safegame::dp {

struct GridSpec {
  /// Points per state axis (>= 2). Empty: 41 per axis.
  std::vector<int> points;
  /// Defaults to the model's domain box.
  game::Box box;
  int ud_points = 9;  // per defender axis; 1 picks the box centre
  int ua_points = 9;
  /// Gaussian quadrature nodes per disturbance axis.
  int w_nodes = 5;
  /// When > 0, use this many equally weighted samples instead.
  int w_samples = 0;
  std::uint64_t seed = 1;
  /// Rejects grids whose stored tables would exceed this many bytes.
  std::size_t memory_budget = std::size_t{2} << 30;
};

/// Gauss quadrature for a law given by raw moments m_0..m_{2k-1}
/// (Golub-Welsch through the Hankel moment matrix). Returns k nodes and
/// weights summing to m_0.
struct Quadrature {
  std::vector<double> nodes;
  std::vector<double> weights;
};
Quadrature gauss_from_moments(const std::vector<double>& moments, int k);

/// Tensor lattice with `per_axis` points on each axis of `box`.
std::vector<std::vector<double>> action_lattice(const game::Box& box,
                                                int per_axis);

/// Discretised problem. Layer l of node x moves to next_layer[x*layers+l]
/// (-1: worth 0); terminal[x*layers+l] is the value at the last stage.
struct Problem {
  const game::GameModel* model = nullptr;
  game::StateGrid grid;
  std::vector<std::vector<double>> ud_lattice, ua_lattice, w_nodes;
  std::vector<double> w_weights;
  std::vector<std::string> node_labels;  // "" when unlabelled
  int layers = 1;
  std::vector<int> next_layer;
  std::vector<double> terminal;
  /// Single-layer problems: labels under which the value is kept.
  std::set<std::string> safe_props;
  /// Labels allowed at the initial state; empty means any.
  std::set<std::string> initial_props;
  /// Layer holding the value of interest at stage 0.
  int start_layer = 0;
  /// Automaton used in product mode.
  std::optional<automaton::Dfa> dfa;
};

/// Grid with a single layer: the value is kept only while the label stays in
/// `safe_props`.
Problem build_grid(const game::GameModel& m, const GridSpec& spec,
                   const std::set<std::string>& safe_props);

enum class Mode {
  /// Safe set from the top-level G conjuncts, initial letters from the
  /// propositional conjuncts.
  kInvariant,
  /// Product with the automaton of the formula; layers are automaton states.
  kProduct,
};

Problem build_grid(const game::GameModel& m, const GridSpec& spec,
                   const formula::Formula& f, Mode mode);

/// Per-stage tables, stage 0 first.
struct ValueGrid {
  Problem problem;
  std::vector<std::vector<double>> value;      // [k][node*layers+layer]
  std::vector<std::vector<int>> ud_choice;     // [k][node*layers+layer]
  std::vector<std::vector<int>> ua_response;   // [k][(node*layers+layer)*|ud|+i]

  int stages() const { return static_cast<int>(value.size()); }
};

/// One backup of `v_next` (nodes x layers) through the problem.
kernels::BackupOutput backup(const Problem& p, const std::vector<double>& v_next,
                             kernels::Backend b = kernels::default_backend());

/// Backward recursion over `horizon` stages.
ValueGrid solve(Problem p, int horizon,
                kernels::Backend b = kernels::default_backend());

/// Expected continuation values Q[i][j] for defender action i and adversary
/// action j at (node, layer).
std::vector<std::vector<double>> action_values(const Problem& p,
                                               const std::vector<double>& v_next,
                                               std::size_t node, int layer = 0);

/// Stage-0 value at an arbitrary x0: reads the label of x0 exactly, then
/// backs up once from the stage-1 table. 0 when the label of x0 is not an
/// allowed initial proposition.
double initial_value(const ValueGrid& vg, std::span<const double> x0);

/// Nearest-node defender policy from stage `stage`, layer `layer`.
game::StationaryPolicy extract_policy(const ValueGrid& vg, int stage = 0,
                                      int layer = 0);

/// Adversary that plays the recorded best response at the nearest node and
/// nearest defender lattice action.
game::StationaryPolicy worst_adversary(const ValueGrid& vg, int stage = 0,
                                       int layer = 0);

}  // namespace safegame::dp
