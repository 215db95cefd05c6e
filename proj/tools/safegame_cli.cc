// Command-line driver. Exit codes: 0 when the computation completed (a
// failed verification still exits 0), 1 on runtime failure, 2 on invalid
// input (model, formula, certificate).

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "safegame/automaton.h"
#include "safegame/barrier.h"
#include "safegame/dp.h"
#include "safegame/formula.h"
#include "safegame/game.h"
#include "safegame/kernels.h"
#include "safegame/model_io.h"
#include "safegame/pipeline.h"
#include "safegame/sos.h"

namespace {

using nlohmann::json;
using namespace safegame;

/// Bad user input; mapped to exit code 2.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Global {
  std::uint64_t seed = 1;
  int threads = 0;
  std::string out;
  std::string format = "json";
};

void emit(const Global& g, const json& j, const std::string& csv) {
  std::ostringstream os;
  if (g.format == "csv") {
    os << csv;
  } else {
    os << j.dump(2) << '\n';
  }
  if (g.out.empty()) {
    std::cout << os.str();
    return;
  }
  std::ofstream f(g.out);
  if (!f) throw std::runtime_error("cannot write " + g.out);
  f << os.str();
}

std::string csv_num(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

std::vector<std::string> split(const std::string& s, char sep = ',') {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(s);
  while (std::getline(is, cur, sep))
    if (!cur.empty()) out.push_back(cur);
  return out;
}

std::vector<double> parse_point(const std::string& s, std::size_t dim, const char* what) {
  std::vector<double> v;
  try {
    for (const auto& t : split(s)) v.push_back(std::stod(t));
  } catch (const std::exception&) {
    throw InputError(std::string(what) + ": not a comma-separated list of numbers");
  }
  if (v.size() != dim)
    throw InputError(std::string(what) + ": expected " + std::to_string(dim) + " values");
  return v;
}

game::GameModel load_model(const std::string& path) { return game::load_model(path); }

json read_json(const std::string& path, const char* what) {
  std::ifstream f(path);
  if (!f) throw InputError(std::string("cannot open ") + what + " file " + path);
  try {
    return json::parse(f);
  } catch (const json::exception& e) {
    throw InputError(std::string(what) + " " + path + ": " + e.what());
  }
}

/// Accepts a bare certificate or the output of `synthesize`.
barrier::Certificate read_certificate(const std::string& path, const game::GameModel& m) {
  auto j = read_json(path, "certificate");
  if (j.contains("certificate")) j = j.at("certificate");
  if (j.is_null()) throw InputError("certificate " + path + " is null (synthesis failed)");
  try {
    return barrier::certificate_from_json(j, m);
  } catch (const std::exception& e) {
    throw InputError(path + ": " + e.what());
  }
}

formula::Formula parse_formula(const std::string& text, const std::set<std::string>& props) {
  try {
    return formula::parse(text, props);
  } catch (const formula::ParseError& e) {
    throw InputError(std::string("formula: ") + e.what());
  }
}

std::vector<std::string> alphabet_for(const std::string& model_path, const std::string& ap,
                                      const formula::Formula* f) {
  if (!model_path.empty()) return load_model(model_path).propositions();
  if (!ap.empty()) return split(ap);
  if (!f) throw InputError("give --model or --ap");
  const auto atoms = f->atoms();
  return {atoms.begin(), atoms.end()};
}

std::set<std::string> as_set(const std::vector<std::string>& v) {
  return {v.begin(), v.end()};
}

formula::Formula safe_formula(const game::GameModel& m, const std::string& text) {
  try {
    return pipeline::parse_safe_formula(m, text);
  } catch (const std::exception& e) {
    throw InputError(std::string("formula: ") + e.what());
  }
}

// Sets for verification and synthesis: either explicit letter lists or the
// triples of a formula.
struct SetTask {
  std::string name;
  barrier::SetUnion init, unsafe;
};

std::vector<SetTask> set_tasks(const game::GameModel& m, const std::string& formula_text,
                               const std::string& init, const std::string& unsafe,
                               int horizon) {
  std::vector<SetTask> tasks;
  if (!init.empty() || !unsafe.empty()) {
    if (init.empty() || unsafe.empty()) throw InputError("give both --init and --unsafe");
    tasks.push_back({"init=" + init + ";unsafe=" + unsafe, barrier::preimage(m, split(init)),
                     barrier::preimage(m, split(unsafe))});
    return tasks;
  }
  if (formula_text.empty()) throw InputError("give --formula or --init/--unsafe");
  const auto phi = safe_formula(m, formula_text);
  const auto dfa = automaton::ltlf_to_dfa(formula::negate(phi), m.propositions());
  std::set<automaton::TriplePath> seen;
  for (const auto& run : automaton::enumerate_runs(dfa, horizon))
    for (const auto& t : automaton::triple_paths(run, horizon, dfa))
      if (seen.insert(t).second) {
        const auto s = barrier::triple_sets(m, dfa, t);
        tasks.push_back({"(" + dfa.state_name(t.q) + "," + dfa.state_name(t.q_mid) + "," +
                             dfa.state_name(t.q_end) + "," + std::to_string(t.loop_bound) +
                             ")",
                         s.init, s.unsafe});
      }
  return tasks;
}

sos::UaMode ua_mode(const std::string& s) {
  if (s == "endpoints") return sos::UaMode::kEndpoints;
  if (s == "multiplier") return sos::UaMode::kMultiplier;
  throw InputError("--ua-mode must be endpoints or multiplier");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Probabilistic safety bounds for stochastic games with LTLf specifications"};
  app.require_subcommand(1);
  Global g;
  app.add_option("--seed", g.seed, "Random seed")->capture_default_str();
  app.add_option("--threads", g.threads, "OpenMP threads (0: runtime default)");
  app.add_option("--out", g.out, "Write the result here instead of stdout");
  app.add_option("--format", g.format, "Output format")
      ->check(CLI::IsMember({"json", "csv"}))
      ->capture_default_str();

  std::string formula_text, ap, model_path, cert_path, x0_text, init_text, unsafe_text;
  std::string mode_text = "invariant", ua_mode_text = "endpoints", grid_text;
  std::string defender_text, adversary_text;
  bool negate_flag = false, dot_flag = false, values_flag = false, sos_flag = false;
  int horizon = -1, degree = 2, max_iters = 20000, grid_points = 201;
  int policy_degree = -1, policy_iterations = 0;
  int ud_points = 9, ua_points = 9, w_nodes = 5, w_samples = 0, trajectories = 0;
  double c = 0.0, delta_tol = 1e-3;
  std::int64_t samples = 0;

  auto* parse_cmd = app.add_subcommand("parse", "Parse a formula and print its normal forms");
  parse_cmd->add_option("--formula", formula_text)->required();
  parse_cmd->add_option("--ap", ap, "Comma-separated propositions (default: any)");

  auto* dfa_cmd = app.add_subcommand("to-dfa", "Minimal automaton of a formula");
  dfa_cmd->add_option("--formula", formula_text)->required();
  dfa_cmd->add_option("--ap", ap, "Alphabet (default: the formula's atoms)");
  dfa_cmd->add_option("--model", model_path, "Take the alphabet from a model");
  dfa_cmd->add_flag("--negate", negate_flag, "Translate the negation instead");
  dfa_cmd->add_flag("--dot", dot_flag, "Print Graphviz instead of JSON");

  auto* runs_cmd = app.add_subcommand("runs", "Accepting runs of the negated automaton");
  runs_cmd->add_option("--formula", formula_text)->required();
  runs_cmd->add_option("--ap", ap);
  runs_cmd->add_option("--model", model_path);
  runs_cmd->add_option("--horizon", horizon)->required();

  auto add_synthesis = [&](CLI::App* cmd) {
    cmd->add_option("--degree", degree, "Barrier degree")->capture_default_str();
    cmd->add_option("--c", c, "Drift allowance c >= 0")->capture_default_str();
    cmd->add_option("--delta-tol", delta_tol)->capture_default_str();
    cmd->add_option("--max-iters", max_iters, "Solver iterations per delta probe")
        ->capture_default_str();
    cmd->add_option("--policy-degree", policy_degree, "Refit the policy (< 0: keep zero)");
    cmd->add_option("--policy-iterations", policy_iterations);
    cmd->add_option("--ua-mode", ua_mode_text, "endpoints or multiplier")
        ->capture_default_str();
  };

  auto* bound_cmd = app.add_subcommand("bound", "Lower bound on satisfying the formula");
  bound_cmd->add_option("--model", model_path)->required();
  bound_cmd->add_option("--formula", formula_text)->required();
  bound_cmd->add_option("--horizon", horizon, "Default: the model horizon");
  bound_cmd->add_option("--certificate", cert_path, "Verify this certificate per triple");
  bound_cmd->add_option("--grid-points", grid_points)->capture_default_str();
  bound_cmd->add_option("--mc-samples", samples, "Monte Carlo cross-check samples");
  bound_cmd->add_option("--x0", x0_text, "Initial state for the cross-check");
  add_synthesis(bound_cmd);

  auto* dp_cmd = app.add_subcommand("dp-solve", "Grid dynamic programming value");
  dp_cmd->add_option("--model", model_path)->required();
  dp_cmd->add_option("--formula", formula_text)->required();
  dp_cmd->add_option("--horizon", horizon);
  dp_cmd->add_option("--grid", grid_text, "Points per axis, e.g. 41,41");
  dp_cmd->add_option("--ud-points", ud_points)->capture_default_str();
  dp_cmd->add_option("--ua-points", ua_points)->capture_default_str();
  dp_cmd->add_option("--w-nodes", w_nodes)->capture_default_str();
  dp_cmd->add_option("--w-samples", w_samples);
  dp_cmd->add_option("--mode", mode_text, "invariant or product")->capture_default_str();
  dp_cmd->add_option("--x0", x0_text);
  dp_cmd->add_option("--mc-samples", samples, "Cross-check the extracted policies");
  dp_cmd->add_flag("--values", values_flag, "Include the stage-0 value table");

  auto* sim_cmd = app.add_subcommand("simulate", "Monte Carlo rollouts");
  sim_cmd->add_option("--model", model_path)->required();
  sim_cmd->add_option("--x0", x0_text)->required();
  sim_cmd->add_option("--samples", samples, "Rollouts")->required();
  sim_cmd->add_option("--formula", formula_text, "Estimate satisfaction");
  sim_cmd->add_option("--unsafe", unsafe_text, "Estimate reaching these propositions");
  sim_cmd->add_option("--defender", defender_text,
                      "Defender polynomials in x, separated by ';' (default 0)");
  sim_cmd->add_option("--certificate", cert_path, "Use the certificate's policy");
  sim_cmd->add_option("--adversary", adversary_text,
                      "Adversary polynomials in x and u_d, separated by ';' (default 0)");
  sim_cmd->add_option("--trajectories", trajectories, "Also print this many rollouts");

  auto* ver_cmd = app.add_subcommand("verify-barrier", "Grid and SOS checks of a certificate");
  ver_cmd->add_option("--model", model_path)->required();
  ver_cmd->add_option("--certificate", cert_path)->required();
  ver_cmd->add_option("--formula", formula_text, "Check every triple of the formula");
  ver_cmd->add_option("--init", init_text, "Initial propositions");
  ver_cmd->add_option("--unsafe", unsafe_text, "Unsafe propositions");
  ver_cmd->add_option("--horizon", horizon);
  ver_cmd->add_option("--grid-points", grid_points)->capture_default_str();
  ver_cmd->add_flag("--sos", sos_flag, "Also search SOS multipliers");
  ver_cmd->add_option("--ua-mode", ua_mode_text)->capture_default_str();

  auto* syn_cmd = app.add_subcommand("synthesize", "Synthesize a barrier certificate");
  syn_cmd->add_option("--model", model_path)->required();
  syn_cmd->add_option("--formula", formula_text, "Synthesize for every triple");
  syn_cmd->add_option("--init", init_text);
  syn_cmd->add_option("--unsafe", unsafe_text);
  syn_cmd->add_option("--horizon", horizon);
  syn_cmd->add_option("--grid-points", grid_points)->capture_default_str();
  add_synthesis(syn_cmd);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    kernels::set_num_threads(g.threads);

    auto synthesis_spec = [&] {
      sos::SynthesisSpec s;
      s.barrier_degree = degree;
      s.c = c;
      s.delta_tol = delta_tol;
      s.solver.max_iters = max_iters;
      s.policy_degree = policy_degree;
      s.policy_iterations = policy_iterations;
      s.ua_mode = ua_mode(ua_mode_text);
      s.verify_options.grid_points = grid_points;
      return s;
    };

    if (*parse_cmd) {
      const auto f = parse_formula(formula_text, as_set(split(ap)));
      const auto atoms = f.atoms();
      json j = {{"input", formula_text},
                {"formula", formula::to_string(f)},
                {"pnf", formula::to_string(formula::to_pnf(f))},
                {"negated", formula::to_string(formula::negate(f))},
                {"safe", formula::is_safe_ltlf(f)},
                {"atoms", std::vector<std::string>(atoms.begin(), atoms.end())},
                {"depth", f.depth()}};
      emit(g, j,
           "formula,pnf,negated,safe,depth\n\"" + j["formula"].get<std::string>() + "\",\"" +
               j["pnf"].get<std::string>() + "\",\"" + j["negated"].get<std::string>() +
               "\"," + (j["safe"].get<bool>() ? "true" : "false") + "," +
               std::to_string(f.depth()) + "\n");
    } else if (*dfa_cmd) {
      const auto f = parse_formula(formula_text, {});
      const auto alphabet = alphabet_for(model_path, ap, &f);
      for (const auto& a : f.atoms())
        if (!as_set(alphabet).count(a)) throw InputError("atom " + a + " is not in the alphabet");
      const auto d = automaton::ltlf_to_dfa(negate_flag ? formula::negate(f) : f, alphabet);
      if (dot_flag) {
        Global raw = g;
        raw.format = "csv";  // plain text passthrough
        emit(raw, json(), automaton::to_dot(d));
      } else {
        auto j = pipeline::dfa_to_json(d);
        j["formula"] = formula::to_string(negate_flag ? formula::negate(f) : f);
        std::string csv = "from,letter,to,to_accepting\n";
        for (int q = 0; q < d.num_states(); ++q)
          for (std::size_t a = 0; a < d.alphabet().size(); ++a)
            csv += d.state_name(q) + "," + d.alphabet()[a] + "," + d.state_name(d.next(q, a)) +
                   "," + (d.is_accepting(d.next(q, a)) ? "true" : "false") + "\n";
        emit(g, j, csv);
      }
    } else if (*runs_cmd) {
      const auto f = parse_formula(formula_text, {});
      const auto alphabet = alphabet_for(model_path, ap, &f);
      const auto d = automaton::ltlf_to_dfa(formula::negate(f), alphabet);
      const auto all = automaton::enumerate_runs(d, horizon);
      json j = {{"formula", formula::to_string(f)},
                {"horizon", horizon},
                {"dfa", pipeline::dfa_to_json(d)},
                {"runs", json::object()}};
      std::string csv = "label,run,triples\n";
      for (const auto& a : d.alphabet()) {
        j["runs"][a] = json::array();
        for (const auto& r : automaton::runs_from_label(all, a)) {
          auto rj = pipeline::run_to_json(d, r);
          rj["triples"] = json::array();
          std::string states, triples;
          for (int q : r.states) states += (states.empty() ? "" : " ") + d.state_name(q);
          for (const auto& t : automaton::triple_paths(r, horizon, d)) {
            rj["triples"].push_back(pipeline::triple_to_json(d, t));
            triples += (triples.empty() ? "" : " ") + std::string("(") + d.state_name(t.q) +
                       ";" + d.state_name(t.q_mid) + ";" + d.state_name(t.q_end) + ";" +
                       std::to_string(t.loop_bound) + ")";
          }
          j["runs"][a].push_back(rj);
          csv += a + "," + states + "," + triples + "\n";
        }
      }
      emit(g, j, csv);
    } else if (*bound_cmd) {
      const auto m = load_model(model_path);
      pipeline::BoundOptions opts;
      opts.horizon = horizon;
      opts.seed = g.seed;
      opts.synthesis = synthesis_spec();
      opts.verify.grid_points = grid_points;
      if (!cert_path.empty()) {
        opts.source = pipeline::BarrierSource::kVerify;
        opts.certificate = read_certificate(cert_path, m);
      }
      opts.mc_samples = samples;
      if (!x0_text.empty())
        opts.x0 = parse_point(x0_text, static_cast<std::size_t>(m.state_dim()), "--x0");
      pipeline::PipelineResult r;
      try {
        r = pipeline::run_bound(m, formula_text, opts);
      } catch (const pipeline::StageError& e) {
        if (e.stage() == "parse") throw InputError(e.what());
        throw;
      }
      if (r.monte_carlo && r.monte_carlo->conflict)
        std::cerr << "WARNING: the analytic bound exceeds a Monte Carlo estimate beyond "
                     "statistical slack\n";
      emit(g, r.to_json(), r.to_csv());
    } else if (*dp_cmd) {
      const auto m = load_model(model_path);
      const auto phi = safe_formula(m, formula_text);
      dp::GridSpec spec;
      if (!grid_text.empty())
        for (const auto& t : split(grid_text)) spec.points.push_back(std::stoi(t));
      spec.ud_points = ud_points;
      spec.ua_points = ua_points;
      spec.w_nodes = w_nodes;
      spec.w_samples = w_samples;
      spec.seed = g.seed;
      if (mode_text != "invariant" && mode_text != "product")
        throw InputError("--mode must be invariant or product");
      const auto mode = mode_text == "product" ? dp::Mode::kProduct : dp::Mode::kInvariant;
      const int n = horizon >= 0 ? horizon : m.horizon;
      const auto vg = dp::solve(dp::build_grid(m, spec, phi, mode), n);
      const auto& grid = vg.problem.grid;
      json j = {{"formula", formula::to_string(phi)},
                {"mode", mode_text},
                {"horizon", n},
                {"grid_points", grid.points()},
                {"nodes", grid.size()},
                {"layers", vg.problem.layers}};
      std::string csv;
      const int layer = vg.problem.start_layer;
      const auto layers = static_cast<std::size_t>(vg.problem.layers);
      std::vector<double> v0(grid.size());
      for (std::size_t i = 0; i < grid.size(); ++i)
        v0[i] = vg.value.front()[i * layers + static_cast<std::size_t>(layer)];
      {
        std::string header;
        for (std::size_t a = 0; a < grid.dim(); ++a) header += "x" + std::to_string(a + 1) + ",";
        csv = header + "value\n";
        for (std::size_t i = 0; i < grid.size(); ++i) {
          for (double x : grid.node(i)) csv += csv_num(x) + ",";
          csv += csv_num(v0[i]) + "\n";
        }
      }
      if (values_flag) j["values"] = v0;
      if (!x0_text.empty()) {
        const auto x0 = parse_point(x0_text, static_cast<std::size_t>(m.state_dim()), "--x0");
        j["x0"] = x0;
        j["value_at_x0"] = dp::initial_value(vg, x0);
        if (samples > 0) {
          const auto s = game::estimate_satisfaction(
              m, phi, dp::extract_policy(vg, 0, layer), dp::worst_adversary(vg, 0, layer), x0,
              samples, g.seed);
          j["monte_carlo"] = {{"estimate", s.estimate},
                              {"ci_halfwidth", s.ci_halfwidth},
                              {"samples", s.samples},
                              {"escapes", s.escapes}};
        }
      }
      emit(g, j, csv);
    } else if (*sim_cmd) {
      const auto m = load_model(model_path);
      const auto x0 = parse_point(x0_text, static_cast<std::size_t>(m.state_dim()), "--x0");
      auto polys = [&](const std::string& text) {
        std::vector<poly::Polynomial> out;
        try {
          for (const auto& t : split(text, ';')) out.push_back(m.parse(t));
        } catch (const std::exception& e) {
          throw InputError(std::string("policy: ") + e.what());
        }
        return out;
      };
      auto defender = game::StationaryPolicy::zero(game::PolicyKind::kDefender, m);
      if (!cert_path.empty()) {
        defender = game::StationaryPolicy::polynomial(game::PolicyKind::kDefender, m,
                                                      read_certificate(cert_path, m).policy);
      } else if (!defender_text.empty()) {
        defender = game::StationaryPolicy::polynomial(game::PolicyKind::kDefender, m,
                                                      polys(defender_text));
      }
      auto adversary = game::StationaryPolicy::zero(game::PolicyKind::kAdversary, m);
      if (!adversary_text.empty())
        adversary = game::StationaryPolicy::polynomial(game::PolicyKind::kAdversary, m,
                                                       polys(adversary_text));
      json j = {{"x0", x0},
                {"samples", samples},
                {"seed", g.seed},
                {"defender", defender.description()},
                {"adversary", adversary.description()}};
      auto stats_json = [](const game::SampleStats& s) {
        return json{{"estimate", s.estimate},
                    {"ci_halfwidth", s.ci_halfwidth},
                    {"samples", s.samples},
                    {"escapes", s.escapes}};
      };
      std::string csv = "quantity,estimate,ci_halfwidth,samples\n";
      if (!formula_text.empty()) {
        const auto phi = safe_formula(m, formula_text);
        const auto s = game::estimate_satisfaction(m, phi, defender, adversary, x0, samples,
                                                   g.seed);
        j["satisfaction"] = stats_json(s);
        csv += "satisfaction," + csv_num(s.estimate) + "," + csv_num(s.ci_halfwidth) + "," +
               std::to_string(s.samples) + "\n";
      }
      if (!unsafe_text.empty()) {
        const auto s = game::estimate_reach(m, barrier::preimage(m, split(unsafe_text)),
                                            defender, adversary, x0, samples, g.seed);
        j["reach"] = stats_json(s);
        csv += "reach," + csv_num(s.estimate) + "," + csv_num(s.ci_halfwidth) + "," +
               std::to_string(s.samples) + "\n";
      }
      if (trajectories > 0) {
        j["trajectories"] = json::array();
        for (int i = 0; i < trajectories; ++i) {
          const auto t = game::simulate(m, defender, adversary, x0, g.seed,
                                        static_cast<std::uint64_t>(i));
          j["trajectories"].push_back(
              {{"states", t.states}, {"trace", t.trace}, {"escaped_at", t.escaped_at}});
        }
      }
      emit(g, j, csv);
    } else if (*ver_cmd) {
      const auto m = load_model(model_path);
      const auto cert = read_certificate(cert_path, m);
      barrier::VerifyOptions vo;
      vo.grid_points = grid_points;
      json j = {{"certificate", barrier::certificate_to_json(cert)}, {"checks", json::array()}};
      std::string csv = "sets,init,unsafe,drift,nonnegative,passed\n";
      bool all = true;
      for (const auto& task : set_tasks(m, formula_text, init_text, unsafe_text,
                                        horizon >= 0 ? horizon : m.horizon)) {
        const auto rep = barrier::verify_certificate(cert, m, task.init, task.unsafe, vo);
        json cj = {{"sets", task.name}, {"grid", rep.to_json()}, {"passed", rep.passed()}};
        if (sos_flag) {
          sos::Prop1Options po;
          po.ua_mode = ua_mode(ua_mode_text);
          cj["sos"] = sos::verify_prop1(cert.B, cert.policy, std::nullopt, m, task.init,
                                        task.unsafe, cert.delta, cert.c, po)
                          .to_json();
        }
        all = all && rep.passed();
        j["checks"].push_back(cj);
        csv += "\"" + task.name + "\"," + csv_num(rep.init.worst_margin) + "," +
               csv_num(rep.unsafe.worst_margin) + "," + csv_num(rep.drift.worst_margin) + "," +
               csv_num(rep.nonnegative.worst_margin) + "," + (rep.passed() ? "true" : "false") +
               "\n";
      }
      j["passed"] = all;
      emit(g, j, csv);
    } else if (*syn_cmd) {
      const auto m = load_model(model_path);
      const auto spec = synthesis_spec();
      json j = {{"certificate", nullptr}, {"runs", json::array()}};
      std::string csv = "sets,delta_star,passed,message\n";
      for (const auto& task : set_tasks(m, formula_text, init_text, unsafe_text,
                                        horizon >= 0 ? horizon : m.horizon)) {
        sos::SynthesisResult r;
        try {
          r = sos::synthesize(spec, m, task.init, task.unsafe);
        } catch (const std::invalid_argument& e) {
          throw InputError(task.name + ": " + e.what());
        }
        auto rj = r.to_json();
        rj["sets"] = task.name;
        if (j["certificate"].is_null() && r.certificate)
          j["certificate"] = barrier::certificate_to_json(*r.certificate);
        j["runs"].push_back(rj);
        csv += "\"" + task.name + "\"," +
               (r.certificate ? csv_num(r.delta_star) : std::string()) + "," +
               (r.report && r.report->passed() ? "true" : "false") + ",\"" + r.message + "\"\n";
      }
      emit(g, j, csv);
    }
  } catch (const game::ModelError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
