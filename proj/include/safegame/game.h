// Discrete-time stochastic game between a defender and an adversary:
// polynomial dynamics, labelled regions, stationary policies and Monte Carlo
// rollouts.

#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "safegame/automaton.h"
#include "safegame/formula.h"
#include "safegame/polynomial.h"
#include "safegame/rng.h"

namespace safegame::game {

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  double width() const { return hi - lo; }
  bool operator==(const Interval&) const = default;
};
using Box = std::vector<Interval>;

bool in_box(const Box& box, std::span<const double> p, double tol = 0.0);

/// Conjunction of g_j >= 0. An empty conjunction is the whole space.
/// Polynomials live in the model universe; points are universe-aligned.
class SemialgebraicSet {
 public:
  SemialgebraicSet() = default;
  explicit SemialgebraicSet(std::vector<poly::Polynomial> ineqs);

  const std::vector<poly::Polynomial>& ineqs() const { return ineqs_; }
  bool is_universal() const { return ineqs_.empty(); }
  bool contains(std::span<const double> point, double tol = 0.0) const;
  /// min_j g_j(point); +inf for the whole space.
  double margin(std::span<const double> point) const;

 private:
  std::vector<poly::Polynomial> ineqs_;
  std::vector<poly::CompiledPolynomial> compiled_;
};

struct Region {
  std::string prop;
  SemialgebraicSet set;
};

enum class Law { kUniform, kGaussian, kMoments };

/// Independent, identically distributed, zero-mean disturbance coordinates.
struct Disturbance {
  Law law = Law::kUniform;
  double lo = -1.0, hi = 1.0;  // uniform support
  double sigma = 1.0;          // gaussian
  std::vector<double> moments; // user-supplied raw moments m_0..m_K

  /// Raw moments up to `order` (throws InsufficientMoments for a short
  /// user list).
  std::vector<double> raw_moments(int order) const;
  /// Moment table for the given disturbance variable names.
  poly::MomentTable table(const std::vector<std::string>& names, int order) const;
  bool samplable() const { return law != Law::kMoments; }
  double sample(CounterRng& rng) const;
};

/// Variable universe layout: x1..xn, then defender, adversary and disturbance
/// variables. A one-dimensional action is named `ud` / `ua`; otherwise
/// `ud1`.. / `ua1`...
class GameModel {
 public:
  GameModel() = default;
  GameModel(int state_dim, int ud_dim, int ua_dim, int w_dim);

  int state_dim() const { return n_; }
  int ud_dim() const { return nd_; }
  int ua_dim() const { return na_; }
  int w_dim() const { return nw_; }
  const poly::Universe& universe() const { return universe_; }
  std::size_t ud_offset() const { return n_; }
  std::size_t ua_offset() const { return n_ + nd_; }
  std::size_t w_offset() const { return n_ + nd_ + na_; }
  std::vector<std::string> state_names() const;
  std::vector<std::string> ud_names() const;
  std::vector<std::string> ua_names() const;
  std::vector<std::string> w_names() const;

  poly::Polynomial parse(std::string_view text) const;
  /// Universe-aligned point; omitted blocks are zero.
  std::vector<double> point(std::span<const double> x,
                            std::span<const double> ud = {},
                            std::span<const double> ua = {},
                            std::span<const double> w = {}) const;

  // Model data. Call finalize() after editing.
  std::vector<poly::Polynomial> dynamics;
  Box ud_box, ua_box, domain_box;
  /// States outside this box end a rollout; defaults to the domain box.
  Box escape_box;
  Disturbance disturbance;
  int horizon = 1;
  std::vector<Region> regions;
  std::optional<std::string> complement_prop;
  /// Where the barrier drift condition is imposed; whole domain box when
  /// universal.
  SemialgebraicSet state_set;

  /// Checks invariants, compiles the dynamics and fills `warnings`.
  /// Throws std::invalid_argument on a malformed model.
  void finalize();
  std::vector<std::string> warnings;

  /// Region propositions in declared order, then the complement.
  std::vector<std::string> propositions() const;
  /// Dynamics compiled over the universe.
  const std::vector<poly::CompiledPolynomial>& compiled_dynamics() const {
    return compiled_;
  }
  /// Whether every dynamics polynomial has degree <= 1 in the adversary
  /// variables.
  bool affine_in_ua() const;

 private:
  int n_ = 0, nd_ = 0, na_ = 0, nw_ = 0;
  poly::Universe universe_;
  std::vector<poly::CompiledPolynomial> compiled_;
};

/// Successor state. Throws std::domain_error when an action leaves its box.
std::vector<double> step(const GameModel& m, std::span<const double> x,
                         std::span<const double> ud, std::span<const double> ua,
                         std::span<const double> w);

/// First region in declared order containing x, else the complement.
/// Throws std::domain_error when nothing matches and no complement exists.
std::string label(const GameModel& m, std::span<const double> x);

/// Regular lattice over a box with `points[i] >= 2` nodes per axis, row-major
/// with the last axis fastest.
class StateGrid {
 public:
  StateGrid() = default;
  StateGrid(Box box, std::vector<int> points);

  const Box& box() const { return box_; }
  const std::vector<int>& points() const { return points_; }
  std::size_t dim() const { return box_.size(); }
  std::size_t size() const { return size_; }
  double spacing(std::size_t axis) const;
  double coord(std::size_t axis, int i) const;
  std::vector<double> node(std::size_t index) const;
  std::size_t flat(std::span<const int> idx) const;
  /// Nearest node, clamped into the grid.
  std::size_t nearest(std::span<const double> x) const;

 private:
  Box box_;
  std::vector<int> points_;
  std::vector<std::size_t> strides_;
  std::size_t size_ = 0;
};

enum class PolicyKind { kDefender, kAdversary };

/// Stationary policy. Defender maps x to u_d; adversary maps (x, u_d) to u_a.
/// Outputs are clipped to the action box.
class StationaryPolicy {
 public:
  using Fn = std::function<void(std::span<const double> x,
                                std::span<const double> ud,
                                std::span<double> out)>;

  static StationaryPolicy constant(PolicyKind kind, Box box,
                                   std::vector<double> value);
  /// Polynomials in the model universe, over x (and u_d for an adversary).
  static StationaryPolicy polynomial(PolicyKind kind, const GameModel& m,
                                     std::vector<poly::Polynomial> components);
  /// Nearest-node lookup in `table` (one action per grid node).
  static StationaryPolicy grid(PolicyKind kind, Box box, StateGrid grid,
                               std::vector<std::vector<double>> table);
  static StationaryPolicy custom(PolicyKind kind, Box box, Fn fn,
                                 std::string description);

  /// The model's defender (or adversary) policy that always plays zero,
  /// clipped into the box.
  static StationaryPolicy zero(PolicyKind kind, const GameModel& m);

  PolicyKind kind() const { return kind_; }
  const Box& box() const { return box_; }
  const std::string& description() const { return description_; }
  const std::vector<poly::Polynomial>& polynomials() const { return polys_; }

  void act(std::span<const double> x, std::span<const double> ud,
           std::span<double> out) const;
  std::vector<double> operator()(std::span<const double> x,
                                 std::span<const double> ud = {}) const;

 private:
  PolicyKind kind_ = PolicyKind::kDefender;
  Box box_;
  Fn fn_;
  std::string description_;
  std::vector<poly::Polynomial> polys_;
};

struct Trajectory {
  std::vector<std::vector<double>> states;  // x_0 .. up to the escape point
  formula::Trace trace;                     // always `horizon` letters
  int escaped_at = -1;                      // first out-of-box step, or -1
};

/// `horizon`-step rollout; draws come from stream `stream` of `seed`.
/// After an escape the remaining letters are the complement proposition.
Trajectory simulate(const GameModel& m, const StationaryPolicy& defender,
                    const StationaryPolicy& adversary,
                    std::span<const double> x0, std::uint64_t seed,
                    std::uint64_t stream = 0);

struct SampleStats {
  double estimate = 0.0;
  std::int64_t samples = 0;
  double ci_halfwidth = 0.0;  // 95% normal approximation
  std::int64_t escapes = 0;

  static SampleStats from_counts(std::int64_t hits, std::int64_t samples,
                                 std::int64_t escapes = 0);
};

/// Fraction of `samples` rollouts whose trace satisfies `f`. Trajectory i
/// uses stream i, so results do not depend on scheduling. Each trace is
/// checked both by direct evaluation and by the automaton; disagreement
/// throws std::logic_error.
SampleStats estimate_satisfaction(const GameModel& m, const formula::Formula& f,
                                  const StationaryPolicy& defender,
                                  const StationaryPolicy& adversary,
                                  std::span<const double> x0,
                                  std::int64_t samples, std::uint64_t seed);

/// Fraction of rollouts that visit the union of `targets` at some step
/// k < horizon.
SampleStats estimate_reach(const GameModel& m,
                           const std::vector<SemialgebraicSet>& targets,
                           const StationaryPolicy& defender,
                           const StationaryPolicy& adversary,
                           std::span<const double> x0, std::int64_t samples,
                           std::uint64_t seed);

}  // namespace safegame::game
