#include "safegame/pipeline.h"

#include <algorithm>
#include <chrono>
#include <set>
#include <sstream>

namespace safegame::pipeline {

using nlohmann::json;

nlohmann::json dfa_to_json(const automaton::Dfa& d) {
  json states = json::array();
  for (int q = 0; q < d.num_states(); ++q)
    states.push_back({{"name", d.state_name(q)},
                      {"accepting", d.is_accepting(q)},
                      {"formula", d.description(q)}});
  json edges = json::array();
  for (int q = 0; q < d.num_states(); ++q)
    for (std::size_t a = 0; a < d.alphabet().size(); ++a)
      edges.push_back({{"from", d.state_name(q)},
                       {"letter", d.alphabet()[a]},
                       {"to", d.state_name(d.next(q, a))}});
  return {{"alphabet", d.alphabet()},
          {"initial", d.state_name(d.initial())},
          {"num_states", d.num_states()},
          {"num_transitions", d.num_transitions()},
          {"states", states},
          {"transitions", edges}};
}

nlohmann::json run_to_json(const automaton::Dfa& d, const automaton::Run& r) {
  json states = json::array();
  for (int q : r.states) states.push_back(d.state_name(q));
  return {{"states", states}, {"letters", r.letters}};
}

nlohmann::json triple_to_json(const automaton::Dfa& d, const automaton::TriplePath& t) {
  return {{"q", d.state_name(t.q)},
          {"q_mid", d.state_name(t.q_mid)},
          {"q_end", d.state_name(t.q_end)},
          {"loop_bound", t.loop_bound}};
}

formula::Formula parse_safe_formula(const game::GameModel& m, const std::string& text) {
  const auto props = m.propositions();
  const auto f = formula::parse(text, std::set<std::string>(props.begin(), props.end()));
  if (!formula::is_safe_ltlf(f))
    throw std::invalid_argument("formula is not in the safe fragment (only X and G "
                                "after pushing negations inward)");
  return f;
}

namespace {

using Clock = std::chrono::steady_clock;

template <class F>
auto stage(PipelineResult& out, const std::string& name, F&& fn) {
  const auto t0 = Clock::now();
  try {
    if constexpr (std::is_void_v<decltype(fn())>) {
      fn();
      out.timing_ms[name] =
          std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
    } else {
      auto r = fn();
      out.timing_ms[name] =
          std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
      return r;
    }
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(name, e.what());
  }
}

void certify(TripleRow& row, const game::GameModel& m, const automaton::Dfa& dfa,
             const BoundOptions& opts) {
  const auto sets = barrier::triple_sets(m, dfa, row.triple);
  if (sets.init.empty() || sets.unsafe.empty()) {
    row.note = "empty entry or exit set";
    return;
  }
  if (barrier::sampled_overlap(m, sets.init, sets.unsafe, 101)) {
    row.note = "entry and exit sets overlap; no certificate can exist";
    return;
  }
  if (opts.source == BarrierSource::kVerify) {
    const auto& cert = *opts.certificate;
    row.certificate = cert;
    row.report = barrier::verify_certificate(cert, m, sets.init, sets.unsafe, opts.verify);
    if (row.report->passed()) {
      row.delta = cert.delta;
      row.c = cert.c;
      row.source = "user-supplied";
    } else {
      row.note = "certificate rejected by the grid check";
    }
    return;
  }
  auto spec = opts.synthesis;
  spec.verify = true;
  spec.verify_options = opts.verify;
  const auto r = sos::synthesize(spec, m, sets.init, sets.unsafe);
  row.note = r.message;
  if (!r.certificate) return;
  row.certificate = r.certificate;
  row.report = r.report;
  if (r.report && r.report->passed()) {
    row.delta = r.certificate->delta;
    row.c = r.certificate->c;
    row.source = "synthesized";
  } else {
    row.note = "synthesized certificate failed the grid check; using the trivial bound";
  }
}

void cross_check(PipelineResult& out, const game::GameModel& m, const formula::Formula& f,
                 const BoundOptions& opts) {
  MonteCarloCheck mc;
  mc.x0 = *opts.x0;
  mc.label = game::label(m, mc.x0);
  mc.bound = out.bounds.at(mc.label);

  // Defender: the certificate policy when the letter's triples agree on one.
  std::optional<std::vector<poly::Polynomial>> policy;
  bool unique = true;
  for (const auto& row : out.triples) {
    if (std::find(row.labels.begin(), row.labels.end(), mc.label) == row.labels.end() ||
        !row.certificate)
      continue;
    if (!policy) {
      policy = row.certificate->policy;
    } else {
      for (std::size_t i = 0; i < policy->size(); ++i)
        if (!(*policy)[i].approx_equal(row.certificate->policy[i], 0.0)) unique = false;
    }
  }
  game::StationaryPolicy defender =
      policy && unique
          ? game::StationaryPolicy::polynomial(game::PolicyKind::kDefender, m, *policy)
          : game::StationaryPolicy::zero(game::PolicyKind::kDefender, m);
  mc.defender = defender.description();

  // Adversaries: every vertex of the u_a box plus its centre.
  std::vector<std::vector<double>> actions{{}};
  for (const auto& iv : m.ua_box) {
    std::vector<std::vector<double>> next;
    for (const auto& a : actions)
      for (double v : {iv.lo, iv.hi}) {
        auto b = a;
        b.push_back(v);
        next.push_back(b);
      }
    actions = std::move(next);
  }
  std::vector<double> centre;
  for (const auto& iv : m.ua_box) centre.push_back(0.5 * (iv.lo + iv.hi));
  if (!m.ua_box.empty()) actions.push_back(centre);

  for (const auto& a : actions) {
    const auto adv = game::StationaryPolicy::constant(game::PolicyKind::kAdversary,
                                                      m.ua_box, a);
    const auto s =
        game::estimate_satisfaction(m, f, defender, adv, mc.x0, opts.mc_samples, opts.seed);
    std::string name = "constant ua=(";
    for (std::size_t i = 0; i < a.size(); ++i) {
      std::ostringstream v;
      v << a[i];
      name += (i ? "," : "") + v.str();
    }
    mc.estimates.push_back({name + ")", s});
    if (mc.bound > s.estimate + 3.0 * s.ci_halfwidth + 1e-12) mc.conflict = true;
  }
  out.monte_carlo = std::move(mc);
}

}  // namespace

PipelineResult run_bound(const game::GameModel& m, const std::string& formula_text,
                         const BoundOptions& opts) {
  PipelineResult out;
  out.horizon = opts.horizon >= 0 ? opts.horizon : m.horizon;
  if (opts.source == BarrierSource::kVerify && !opts.certificate)
    throw StageError("options", "verification mode needs a certificate");

  const auto phi = stage(out, "parse", [&] { return parse_safe_formula(m, formula_text); });
  out.formula = formula::to_string(phi);
  const auto neg = stage(out, "negate", [&] { return formula::negate(phi); });
  out.negated = formula::to_string(neg);
  out.dfa_neg = stage(out, "dfa", [&] {
    return automaton::ltlf_to_dfa(neg, m.propositions());
  });
  const auto& dfa = out.dfa_neg;

  std::map<automaton::TriplePath, std::size_t> index;
  stage(out, "runs", [&] {
    const auto all = automaton::enumerate_runs(dfa, out.horizon);
    for (const auto& a : dfa.alphabet()) {
      out.runs[a] = automaton::runs_from_label(all, a);
      for (const auto& run : out.runs[a]) {
        for (const auto& t : automaton::triple_paths(run, out.horizon, dfa)) {
          auto [it, fresh] = index.emplace(t, out.triples.size());
          if (fresh) {
            out.triples.emplace_back();
            out.triples.back().triple = t;
          }
          auto& labels = out.triples[it->second].labels;
          if (std::find(labels.begin(), labels.end(), a) == labels.end())
            labels.push_back(a);
        }
      }
    }
  });

  stage(out, "certificates", [&] {
    for (auto& row : out.triples) certify(row, m, dfa, opts);
  });

  stage(out, "bound", [&] {
    std::map<automaton::TriplePath, barrier::TripleBound> table;
    for (const auto& row : out.triples) table[row.triple] = {row.delta, row.c};
    for (const auto& a : dfa.alphabet())
      out.bounds[a] = barrier::satisfaction_lower_bound(dfa, out.horizon, a, table);
  });

  if (opts.mc_samples > 0 && opts.x0)
    stage(out, "monte-carlo", [&] { cross_check(out, m, phi, opts); });
  return out;
}

nlohmann::json PipelineResult::to_json() const {
  json j;
  j["formula"] = formula;
  j["negated"] = negated;
  j["horizon"] = horizon;
  j["dfa"] = {{"num_states", dfa_neg.num_states()},
              {"num_transitions", dfa_neg.num_transitions()},
              {"alphabet", dfa_neg.alphabet()}};
  j["runs"] = json::object();
  for (const auto& [a, rs] : runs) {
    j["runs"][a] = json::array();
    for (const auto& r : rs) j["runs"][a].push_back(run_to_json(dfa_neg, r));
  }
  j["triples"] = json::array();
  for (const auto& row : triples) {
    json t = triple_to_json(dfa_neg, row.triple);
    t["labels"] = row.labels;
    t["delta"] = row.delta;
    t["c"] = row.c;
    t["factor"] = std::clamp(row.delta + row.c * row.triple.loop_bound, 0.0, 1.0);
    t["source"] = row.source;
    t["note"] = row.note;
    t["certificate"] =
        row.certificate ? barrier::certificate_to_json(*row.certificate) : json(nullptr);
    t["verification"] = row.report ? row.report->to_json() : json(nullptr);
    j["triples"].push_back(t);
  }
  j["bounds"] = bounds;
  if (monte_carlo) {
    const auto& mc = *monte_carlo;
    json est = json::array();
    for (const auto& e : mc.estimates)
      est.push_back({{"adversary", e.adversary},
                     {"estimate", e.stats.estimate},
                     {"ci_halfwidth", e.stats.ci_halfwidth},
                     {"samples", e.stats.samples},
                     {"escapes", e.stats.escapes}});
    j["monte_carlo"] = {{"label", mc.label},     {"x0", mc.x0},
                        {"defender", mc.defender}, {"analytic_bound", mc.bound},
                        {"estimates", est},       {"conflict", mc.conflict}};
  } else {
    j["monte_carlo"] = nullptr;
  }
  j["timing_ms"] = timing_ms;
  return j;
}

std::string PipelineResult::to_csv() const {
  std::ostringstream os;
  os.precision(17);
  os << "label,q,q_mid,q_end,loop_bound,delta,c,source,bound\n";
  for (const auto& [a, b] : bounds) {
    bool any = false;
    for (const auto& row : triples) {
      if (std::find(row.labels.begin(), row.labels.end(), a) == row.labels.end()) continue;
      any = true;
      os << a << ',' << dfa_neg.state_name(row.triple.q) << ','
         << dfa_neg.state_name(row.triple.q_mid) << ','
         << dfa_neg.state_name(row.triple.q_end) << ',' << row.triple.loop_bound << ','
         << row.delta << ',' << row.c << ',' << row.source << ',' << b << '\n';
    }
    if (!any) os << a << ",,,,,,,," << b << '\n';
  }
  return os.str();
}

}  // namespace safegame::pipeline
