// Stochastic control barrier certificates: drift polynomial, grid
// verification of the certificate conditions, and the reachability and
// satisfaction bounds they induce.

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "safegame/automaton.h"
#include "safegame/game.h"
#include "safegame/polynomial.h"

namespace safegame::barrier {

/// Union of basic semialgebraic sets.
using SetUnion = std::vector<game::SemialgebraicSet>;

enum class Provenance { kSynthesized, kUserSupplied };

struct Certificate {
  poly::Polynomial B;  // over the model universe, state variables only
  double c = 0.0;
  double delta = 1.0;
  /// Defender policy u_d = s(x), one polynomial per defender axis.
  std::vector<poly::Polynomial> policy;
  Provenance provenance = Provenance::kUserSupplied;

  /// Throws std::invalid_argument unless c >= 0, delta in [0, 1], B and the
  /// policy depend on x only and the policy has one entry per defender axis.
  void validate(const game::GameModel& m) const;
};

/// `{B, c, delta, policy, provenance?}`; a missing policy means u_d = 0.
Certificate certificate_from_json(const nlohmann::json& j,
                                  const game::GameModel& m);
nlohmann::json certificate_to_json(const Certificate& cert);

/// E_w[B(f(x, s(x), u_a, w))] - B(x), a polynomial in x and u_a.
/// Throws poly::InsufficientMoments when the law lacks a needed moment.
poly::Polynomial drift_poly(const poly::Polynomial& B, const game::GameModel& m,
                            const std::vector<poly::Polynomial>& policy);

/// Box as the conjunction of (x_i - lo)(hi - x_i) >= 0.
game::SemialgebraicSet box_set(const game::GameModel& m, const game::Box& box);

/// Closed over-approximation of the set labelled by the complement
/// proposition: the domain box intersected with {-g >= 0} for every region
/// given by a single inequality g >= 0.
game::SemialgebraicSet complement_set(const game::GameModel& m);

/// Preimage of a set of letters under the labelling, one member per letter.
SetUnion preimage(const game::GameModel& m,
                  const std::vector<std::string>& letters);

/// Entry and exit sets of a triple (q, q', q''): letters moving q to q' and
/// q' to q''.
struct TripleSets {
  SetUnion init;
  SetUnion unsafe;
};
TripleSets triple_sets(const game::GameModel& m, const automaton::Dfa& dfa,
                       const automaton::TriplePath& triple);

/// Whether both unions share a sampled interior point of the domain box.
std::optional<std::vector<double>> sampled_overlap(const game::GameModel& m,
                                                   const SetUnion& a,
                                                   const SetUnion& b,
                                                   int points_per_axis = 201);

enum class UaCheck {
  kAuto,       // endpoints when the dynamics are affine in u_a, else grid
  kEndpoints,  // vertices of the u_a box
  kGrid,
};

struct VerifyOptions {
  int grid_points = 201;  // per axis; capped so the grid stays below 4e6 nodes
  int refine = 10;        // local refinement factor around the worst node
  UaCheck ua_check = UaCheck::kAuto;
  int ua_grid_points = 21;
  double tolerance = 1e-6;
};

struct ConditionResult {
  std::string name;
  bool pass = true;
  std::size_t points = 0;  // grid and refinement points inside the set
  /// Smallest margin seen; +inf when the set was never sampled.
  double worst_margin = 0.0;
  std::vector<double> witness;     // state at the worst margin
  std::vector<double> witness_ua;  // drift only
  /// Largest margin difference quotient between neighbouring nodes.
  double lipschitz = 0.0;
};

/// Margins: init = delta - B, unsafe = B - 1, drift = c - max_ua drift,
/// nonnegative = B. A condition passes when its worst margin is >= -tolerance.
struct VerificationReport {
  ConditionResult init, unsafe, drift, nonnegative;
  int grid_points = 0;
  std::vector<double> spacing;
  bool policy_in_box = true;
  std::string ua_check;
  std::vector<std::vector<double>> ua_checked;

  bool passed() const {
    return init.pass && unsafe.pass && drift.pass && nonnegative.pass &&
           policy_in_box;
  }
  nlohmann::json to_json() const;
};

/// Dense-grid check of the certificate over the domain box. The drift
/// condition is imposed on the model's state set. Throws
/// std::invalid_argument when `init` and `unsafe` overlap.
VerificationReport verify_certificate(const Certificate& cert,
                                      const game::GameModel& m,
                                      const SetUnion& init,
                                      const SetUnion& unsafe,
                                      const VerifyOptions& opts = {});

struct GridExtremum {
  double value = 0.0;
  std::vector<double> at;
  bool found = false;
};
/// Maximum of `p` over the grid points of the domain box inside `sets`.
GridExtremum grid_max(const poly::Polynomial& p, const game::GameModel& m,
                      const SetUnion& sets, int points_per_axis = 201);

/// min(1, max(0, (b_x0 + c N) / lambda)). Throws for lambda <= 0.
double reachability_bound(double b_x0, double c, int horizon,
                          double lambda = 1.0);

struct TripleBound {
  double delta = 1.0;
  double c = 0.0;
};

/// 1 - sum over accepting runs from `a_j` of the product over their triples
/// of clamp(delta + c T). Throws std::invalid_argument for a missing triple.
double satisfaction_lower_bound(
    const automaton::Dfa& dfa_neg, int horizon, const std::string& a_j,
    const std::map<automaton::TriplePath, TripleBound>& per_triple);

/// Monte Carlo frequency of visiting `unsafe` within the horizon.
game::SampleStats empirical_s_reachability(
    const game::GameModel& m, const game::StationaryPolicy& defender,
    const game::StationaryPolicy& adversary, const SetUnion& unsafe,
    std::span<const double> x0, std::int64_t samples, std::uint64_t seed);

}  // namespace safegame::barrier
