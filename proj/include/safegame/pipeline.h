// End-to-end bound computation: formula -> automaton of the negation ->
// accepting runs -> per-triple barrier certificates -> satisfaction bound.

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "safegame/automaton.h"
#include "safegame/barrier.h"
#include "safegame/formula.h"
#include "safegame/game.h"
#include "safegame/sos.h"

namespace safegame::pipeline {

/// Failure inside one pipeline stage; what() is prefixed with the stage.
class StageError : public std::runtime_error {
 public:
  StageError(std::string stage, const std::string& msg)
      : std::runtime_error("stage '" + stage + "': " + msg), stage_(std::move(stage)) {}
  const std::string& stage() const { return stage_; }

 private:
  std::string stage_;
};

nlohmann::json dfa_to_json(const automaton::Dfa& d);
nlohmann::json run_to_json(const automaton::Dfa& d, const automaton::Run& r);
nlohmann::json triple_to_json(const automaton::Dfa& d, const automaton::TriplePath& t);

/// Parses `text` against the model's propositions and requires the safe
/// fragment.
formula::Formula parse_safe_formula(const game::GameModel& m, const std::string& text);

enum class BarrierSource {
  kSynthesize,  // one synthesis per triple
  kVerify,      // one user certificate, grid-checked per triple
};

struct BoundOptions {
  /// < 0 uses the model horizon.
  int horizon = -1;
  BarrierSource source = BarrierSource::kSynthesize;
  std::optional<barrier::Certificate> certificate;
  sos::SynthesisSpec synthesis;
  barrier::VerifyOptions verify;
  /// Monte Carlo cross-check from x0; skipped when samples == 0 or no x0.
  std::int64_t mc_samples = 0;
  std::optional<std::vector<double>> x0;
  std::uint64_t seed = 1;
};

struct TripleRow {
  automaton::TriplePath triple;
  std::vector<std::string> labels;  // initial propositions whose runs use it
  double delta = 1.0;
  double c = 0.0;
  /// "synthesized", "user-supplied" or "trivial" (delta = 1, c = 0).
  std::string source = "trivial";
  std::string note;
  std::optional<barrier::Certificate> certificate;
  std::optional<barrier::VerificationReport> report;
};

struct AdversaryEstimate {
  std::string adversary;
  game::SampleStats stats;
};

struct MonteCarloCheck {
  std::string label;
  std::vector<double> x0;
  std::string defender;
  std::vector<AdversaryEstimate> estimates;
  double bound = 0.0;
  /// Set when the bound exceeds some estimate by more than 3 CI half-widths.
  bool conflict = false;
};

struct PipelineResult {
  std::string formula;
  std::string negated;
  int horizon = 0;
  automaton::Dfa dfa_neg;
  std::map<std::string, std::vector<automaton::Run>> runs;  // per initial letter
  std::vector<TripleRow> triples;
  std::map<std::string, double> bounds;  // per initial letter
  std::optional<MonteCarloCheck> monte_carlo;
  std::map<std::string, double> timing_ms;

  nlohmann::json to_json() const;
  /// One row per (letter, triple); letters without triples get one row.
  std::string to_csv() const;
};

/// Throws StageError naming the failing stage.
PipelineResult run_bound(const game::GameModel& m, const std::string& formula_text,
                         const BoundOptions& opts);

}  // namespace safegame::pipeline
