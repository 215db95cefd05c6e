// Sum-of-squares feasibility by projection between the PSD cone and the
// coefficient-matching affine set, and barrier certificate synthesis on top
// of it.

#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "safegame/barrier.h"
#include "safegame/game.h"
#include "safegame/polynomial.h"

namespace safegame::sos {

enum class Status {
  kFeasible,
  kBudgetExhausted,   // inconclusive
  kLikelyInfeasible,  // the projection gap stayed flat for three windows (heuristic)
  kInfeasible,        // coefficient matching has no solution at all
};
std::string to_string(Status s);

struct SolverOptions {
  int max_iters = 5000;
  double tol = 1e-7;      // coefficient residual and eigenvalue tolerance
  double relaxation = 1.0;  // Douglas-Rachford averaging weight, in (0, 2)
  int stall_window = 500;
};

/// Decision-variable affine polynomial p0 + sum_k y_k p_k.
struct AffinePoly {
  poly::Polynomial constant;
  std::vector<std::pair<int, poly::Polynomial>> linear;
};

/// Linear matching constraints between free scalars and Gram blocks:
///   expr(y) - sum_b g_b * z_b^T Q_b z_b == 0  coefficient-wise,  Q_b PSD.
class Program {
 public:
  explicit Program(poly::Universe u) : universe_(std::move(u)) {}

  const poly::Universe& universe() const { return universe_; }
  /// Adds `n` free scalars; returns the index of the first.
  int add_free(int n);
  int num_free() const { return num_free_; }
  /// Adds a Gram block over `basis`; returns its id.
  int add_block(std::vector<poly::Monomial> basis);
  const std::vector<poly::Monomial>& basis(int block) const {
    return blocks_.at(block);
  }

  struct Term {
    int block;
    poly::Polynomial factor;  // multiplies z^T Q z
  };
  void add_identity(AffinePoly expr, std::vector<Term> grams);

  /// Adds the block structure for "expr - sum_j s_j g_j is SOS" with SOS
  /// multipliers s_j of the given even degrees over `vars`; the main basis
  /// is pruned against the possible support. Returns the main block id.
  int add_sos_constraint(const AffinePoly& expr,
                         const std::vector<poly::Polynomial>& g,
                         const std::vector<int>& multiplier_degrees,
                         const std::vector<std::size_t>& vars);

  struct Solution {
    Status status = Status::kBudgetExhausted;
    std::vector<double> free;
    std::vector<Eigen::MatrixXd> grams;
    double residual = 0.0;  // max coefficient mismatch
    double min_eig = 0.0;   // smallest Gram eigenvalue
    int iterations = 0;
  };
  Solution solve(const SolverOptions& opts = {}) const;

 private:
  struct Identity {
    AffinePoly expr;
    std::vector<Term> grams;
  };
  poly::Universe universe_;
  int num_free_ = 0;
  std::vector<std::vector<poly::Monomial>> blocks_;
  std::vector<Identity> identities_;
};

/// Monomials over `vars` of degree <= max_degree, graded lexicographic.
std::vector<poly::Monomial> monomials_upto(std::size_t universe_size,
                                           const std::vector<std::size_t>& vars,
                                           int max_degree);

/// Drops basis monomials that cannot appear in a Gram decomposition of a
/// polynomial supported in `support`: outside the bounding box of the half
/// Newton polytope, or with a diagonal square that nothing else can produce.
std::vector<poly::Monomial> prune_basis(std::vector<poly::Monomial> basis,
                                        const std::vector<poly::Monomial>& support);

struct SosResult {
  Status status = Status::kBudgetExhausted;
  std::vector<poly::Monomial> basis;
  Eigen::MatrixXd gram;
  double residual = 0.0;
  double min_eig = 0.0;
  int iterations = 0;
  bool ok() const { return status == Status::kFeasible; }
};

/// Searches a PSD Q with p = z^T Q z. Odd-degree polynomials are reported
/// infeasible without solving.
SosResult check_sos(const poly::Polynomial& p, const SolverOptions& opts = {});

/// Reconstructs z^T Q z.
poly::Polynomial gram_polynomial(const poly::Universe& u,
                                 const std::vector<poly::Monomial>& basis,
                                 const Eigen::MatrixXd& q);

enum class UaMode {
  kEndpoints,   // instantiate the drift at the vertices of the u_a box
  kMultiplier,  // keep u_a symbolic with a multiplier on its box
};

/// SOS multipliers per set member and inequality.
struct Multipliers {
  std::vector<std::vector<poly::Polynomial>> init;    // [member][ineq]
  std::vector<std::vector<poly::Polynomial>> unsafe;  // [member][ineq]
  std::vector<poly::Polynomial> drift;                // per drift-set ineq
  std::vector<poly::Polynomial> nonnegative;          // per drift-set ineq
};

struct ConditionCheck {
  std::string name;
  Status status = Status::kBudgetExhausted;
  double residual = 0.0;
  int iterations = 0;
};

struct Prop1Report {
  std::vector<ConditionCheck> conditions;
  bool all_feasible() const;
  nlohmann::json to_json() const;
};

struct Prop1Options {
  UaMode ua_mode = UaMode::kEndpoints;
  int multiplier_degree = 2;
  SolverOptions solver;
};

/// Inequalities describing the drift region: the model's state set, or the
/// domain box when that set is universal. Each is scaled to unit max
/// coefficient.
std::vector<poly::Polynomial> drift_region(const game::GameModel& m);

/// The SOS conditions for a fixed barrier B and policy: initial set
/// (delta - B - s0 g0), each unsafe member (B - 1 - s1 g1), drift (per u_a
/// vertex or with a u_a box multiplier) and nonnegativity on the drift region.
/// Given multipliers are used as is (and checked SOS); otherwise they are
/// searched.
Prop1Report verify_prop1(const poly::Polynomial& B,
                         const std::vector<poly::Polynomial>& policy,
                         const std::optional<Multipliers>& multipliers,
                         const game::GameModel& m, const barrier::SetUnion& init,
                         const barrier::SetUnion& unsafe, double delta, double c,
                         const Prop1Options& opts = {});

struct SynthesisSpec {
  int barrier_degree = 2;
  int multiplier_degree = 2;
  /// Degree of the fitted policy template; < 0 keeps the initial policy.
  int policy_degree = -1;
  int policy_iterations = 0;
  /// Empty means u_d = 0.
  std::vector<poly::Polynomial> initial_policy;
  double c = 0.0;
  double delta_lo = 0.0;
  double delta_hi = 1.0;
  double delta_tol = 1e-3;
  UaMode ua_mode = UaMode::kEndpoints;
  /// Plateaus make early infeasibility calls unreliable near the optimal
  /// delta, so bisection probes run to budget.
  SolverOptions solver{.max_iters = 20000, .stall_window = 0};
  bool verify = true;
  barrier::VerifyOptions verify_options;
};

struct BisectionStep {
  double delta = 0.0;
  Status status = Status::kBudgetExhausted;
  double residual = 0.0;
  int iterations = 0;
};

struct SynthesisResult {
  std::optional<barrier::Certificate> certificate;
  double delta_star = 1.0;
  /// Largest probed delta that was not shown feasible; -1 if none.
  double delta_below = -1.0;
  std::vector<BisectionStep> steps;
  int policy_rounds = 0;
  std::optional<barrier::VerificationReport> report;
  std::string message;
  nlohmann::json to_json() const;
};

/// Smallest delta (by bisection) for which a barrier of the requested degree
/// passes the SOS conditions, with the policy fixed or alternately refitted.
/// Throws std::invalid_argument when the sets overlap or dimensions clash.
SynthesisResult synthesize(const SynthesisSpec& spec, const game::GameModel& m,
                           const barrier::SetUnion& init,
                           const barrier::SetUnion& unsafe);

/// One fixed-delta feasibility solve; returns the barrier when found.
struct FeasibilityResult {
  Status status = Status::kBudgetExhausted;
  std::optional<poly::Polynomial> B;
  double residual = 0.0;
  int iterations = 0;
};
FeasibilityResult solve_at_delta(const SynthesisSpec& spec,
                                 const game::GameModel& m,
                                 const barrier::SetUnion& init,
                                 const barrier::SetUnion& unsafe,
                                 const std::vector<poly::Polynomial>& policy,
                                 double delta);

}  // namespace safegame::sos
