#include "safegame/dp.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <Eigen/Eigenvalues>

namespace safegame::dp {

Quadrature gauss_from_moments(const std::vector<double>& m, int k) {
  if (k < 1) throw std::invalid_argument("quadrature needs k >= 1");
  if (static_cast<int>(m.size()) < 2 * k)
    throw std::invalid_argument("quadrature with " + std::to_string(k) +
                                " nodes needs moments up to order " +
                                std::to_string(2 * k - 1));
  // Upper Cholesky factor of the Hankel matrix H_ij = m_{i+j}, rows 0..k-1,
  // columns 0..k.
  Eigen::MatrixXd r = Eigen::MatrixXd::Zero(k, k + 1);
  for (int i = 0; i < k; ++i) {
    double d = m[2 * i];
    for (int l = 0; l < i; ++l) d -= r(l, i) * r(l, i);
    if (!(d > 1e-14 * std::max(1.0, std::abs(m[2 * i]))))
      throw std::invalid_argument("disturbance law has fewer than " +
                                  std::to_string(k) + " support points");
    r(i, i) = std::sqrt(d);
    for (int j = i + 1; j <= k; ++j) {
      double s = m[i + j];
      for (int l = 0; l < i; ++l) s -= r(l, i) * r(l, j);
      r(i, j) = s / r(i, i);
    }
  }
  Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(k, k);
  for (int j = 0; j < k; ++j) {
    jac(j, j) = r(j, j + 1) / r(j, j) - (j > 0 ? r(j - 1, j) / r(j - 1, j - 1) : 0.0);
    if (j + 1 < k) {
      const double b = r(j + 1, j + 1) / r(j, j);
      jac(j, j + 1) = b;
      jac(j + 1, j) = b;
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(jac);
  Quadrature q;
  for (int i = 0; i < k; ++i) {
    q.nodes.push_back(eig.eigenvalues()(i));
    const double v = eig.eigenvectors()(0, i);
    q.weights.push_back(m[0] * v * v);
  }
  return q;
}

std::vector<std::vector<double>> action_lattice(const game::Box& box,
                                                int per_axis) {
  if (per_axis < 1) throw std::invalid_argument("action lattice needs >= 1 point");
  std::vector<std::vector<double>> out{{}};
  for (const auto& iv : box) {
    std::vector<double> axis;
    if (per_axis == 1) {
      axis.push_back(0.5 * (iv.lo + iv.hi));
    } else {
      for (int i = 0; i < per_axis; ++i)
        axis.push_back(i + 1 == per_axis
                           ? iv.hi
                           : iv.lo + i * (iv.hi - iv.lo) / (per_axis - 1));
    }
    std::vector<std::vector<double>> next;
    for (const auto& prefix : out)
      for (double a : axis) {
        auto p = prefix;
        p.push_back(a);
        next.push_back(std::move(p));
      }
    out = std::move(next);
  }
  return out;
}

namespace {

void check_budget(const Problem& p, int horizon, std::size_t budget) {
  const double items = static_cast<double>(p.grid.size()) * p.layers;
  const double per_stage =
      items * (sizeof(double) + sizeof(int) + sizeof(int) * p.ud_lattice.size());
  if (per_stage * std::max(horizon, 1) > static_cast<double>(budget))
    throw std::length_error("grid memory budget exceeded");
}

Problem base_problem(const game::GameModel& m, const GridSpec& spec) {
  Problem p;
  p.model = &m;
  const std::size_t n = m.state_dim();
  if (n > 8) throw std::invalid_argument("grid DP supports at most 8 state axes");
  const game::Box box = spec.box.empty() ? m.domain_box : spec.box;
  std::vector<int> pts = spec.points.empty() ? std::vector<int>(n, 41) : spec.points;
  if (pts.size() != n || box.size() != n)
    throw std::invalid_argument("grid spec does not match the state dimension");
  p.grid = game::StateGrid(box, pts);
  p.ud_lattice = action_lattice(m.ud_box, spec.ud_points);
  p.ua_lattice = action_lattice(m.ua_box, spec.ua_points);

  // Disturbance: tensor Gauss rule or equally weighted samples.
  const int nw = m.w_dim();
  if (spec.w_samples > 0) {
    CounterRng rng(spec.seed, 0);
    for (int s = 0; s < spec.w_samples; ++s) {
      std::vector<double> w(nw);
      for (auto& v : w) v = m.disturbance.sample(rng);
      p.w_nodes.push_back(std::move(w));
      p.w_weights.push_back(1.0 / spec.w_samples);
    }
  } else {
    const Quadrature q =
        gauss_from_moments(m.disturbance.raw_moments(2 * spec.w_nodes - 1),
                           spec.w_nodes);
    p.w_nodes = {{}};
    p.w_weights = {1.0};
    for (int a = 0; a < nw; ++a) {
      std::vector<std::vector<double>> nodes;
      std::vector<double> weights;
      for (std::size_t i = 0; i < p.w_nodes.size(); ++i)
        for (std::size_t j = 0; j < q.nodes.size(); ++j) {
          auto w = p.w_nodes[i];
          w.push_back(q.nodes[j]);
          nodes.push_back(std::move(w));
          weights.push_back(p.w_weights[i] * q.weights[j]);
        }
      p.w_nodes = std::move(nodes);
      p.w_weights = std::move(weights);
    }
  }

  p.node_labels.resize(p.grid.size());
  for (std::size_t i = 0; i < p.grid.size(); ++i) {
    try {
      p.node_labels[i] = game::label(m, p.grid.node(i));
    } catch (const std::domain_error&) {
      p.node_labels[i].clear();
    }
  }
  return p;
}

formula::Formula invariant_form(const std::set<std::string>& init,
                                const std::set<std::string>& safe,
                                std::size_t alphabet_size) {
  auto disjunction = [](const std::set<std::string>& s) {
    std::optional<formula::Formula> f;
    for (const auto& a : s) {
      const auto atom = formula::Formula::Atom(a);
      f = f ? formula::Formula::Or(*f, atom) : atom;
    }
    return f ? *f : formula::Formula::False();
  };
  auto g = formula::Formula::Always(disjunction(safe));
  if (init.size() == alphabet_size) return g;
  return formula::Formula::And(disjunction(init), g);
}

}  // namespace

Problem build_grid(const game::GameModel& m, const GridSpec& spec,
                   const std::set<std::string>& safe_props) {
  Problem p = base_problem(m, spec);
  const std::size_t nodes = p.grid.size();
  p.layers = 1;
  p.safe_props = safe_props;
  p.next_layer.assign(nodes, -1);
  p.terminal.assign(nodes, 0.0);
  for (std::size_t i = 0; i < nodes; ++i) {
    if (safe_props.count(p.node_labels[i])) {
      p.next_layer[i] = 0;
      p.terminal[i] = 1.0;
    }
  }
  check_budget(p, m.horizon, spec.memory_budget);
  return p;
}

Problem build_grid(const game::GameModel& m, const GridSpec& spec,
                   const formula::Formula& f, Mode mode) {
  const auto props = m.propositions();
  if (mode == Mode::kInvariant) {
    const auto safe = formula::invariant_letters(f, props);
    const auto init = formula::initial_letters(f, props);
    // The single-layer recursion is exact only for init & G safe.
    const auto expected = automaton::ltlf_to_dfa(f, props);
    const auto reduced =
        automaton::ltlf_to_dfa(invariant_form(init, safe, props.size()), props);
    if (!(expected == reduced))
      throw std::invalid_argument(
          "formula is not an initial condition plus an invariant; use product "
          "mode");
    Problem p = build_grid(m, spec, safe);
    if (init.size() != props.size()) p.initial_props = init;
    return p;
  }
  Problem p = base_problem(m, spec);
  const automaton::Dfa dfa = automaton::ltlf_to_dfa(f, props);
  const std::size_t nodes = p.grid.size();
  p.layers = dfa.num_states();
  p.next_layer.assign(nodes * p.layers, -1);
  p.terminal.assign(nodes * p.layers, 0.0);
  for (std::size_t i = 0; i < nodes; ++i) {
    if (p.node_labels[i].empty()) continue;
    for (int q = 0; q < p.layers; ++q) {
      const int to = dfa.next(q, p.node_labels[i]);
      p.next_layer[i * p.layers + q] = to;
      p.terminal[i * p.layers + q] = dfa.is_accepting(to) ? 1.0 : 0.0;
    }
  }
  p.start_layer = dfa.initial();
  p.dfa = dfa;
  check_budget(p, m.horizon, spec.memory_budget);
  return p;
}

namespace {

kernels::BackupInput input_for(const Problem& p, const std::vector<double>& v_next) {
  if (v_next.size() != p.grid.size() * p.layers)
    throw std::invalid_argument("value table size mismatch");
  kernels::BackupInput in;
  in.grid = &p.grid;
  in.dynamics = &p.model->compiled_dynamics();
  in.universe_size = p.model->universe()->size();
  in.ud_offset = p.model->ud_offset();
  in.ua_offset = p.model->ua_offset();
  in.w_offset = p.model->w_offset();
  in.ud_lattice = &p.ud_lattice;
  in.ua_lattice = &p.ua_lattice;
  in.w_nodes = &p.w_nodes;
  in.w_weights = &p.w_weights;
  in.layers = p.layers;
  in.next_layer = &p.next_layer;
  in.v_next = &v_next;
  return in;
}

}  // namespace

kernels::BackupOutput backup(const Problem& p, const std::vector<double>& v_next,
                             kernels::Backend b) {
  kernels::BackupOutput out;
  kernels::backup(b, input_for(p, v_next), out);
  return out;
}

ValueGrid solve(Problem p, int horizon, kernels::Backend b) {
  if (horizon < 1) throw std::invalid_argument("horizon must be >= 1");
  ValueGrid vg;
  const std::size_t items = p.grid.size() * p.layers;
  vg.value.resize(horizon);
  vg.ud_choice.resize(horizon);
  vg.ua_response.resize(horizon);
  vg.value[horizon - 1] = p.terminal;
  vg.ud_choice[horizon - 1].assign(items, 0);
  vg.ua_response[horizon - 1].assign(items * p.ud_lattice.size(), 0);
  for (int k = horizon - 2; k >= 0; --k) {
    auto out = backup(p, vg.value[k + 1], b);
    vg.value[k] = std::move(out.value);
    vg.ud_choice[k] = std::move(out.ud_choice);
    vg.ua_response[k] = std::move(out.ua_response);
  }
  vg.problem = std::move(p);
  return vg;
}

namespace {

std::vector<std::vector<double>> action_values_at(const Problem& p,
                                                  const std::vector<double>& v_next,
                                                  std::span<const double> x,
                                                  int target) {
  if (v_next.size() != p.grid.size() * p.layers)
    throw std::invalid_argument("value table size mismatch");
  const auto& dyn = p.model->compiled_dynamics();
  std::vector<std::vector<double>> q(p.ud_lattice.size(),
                                     std::vector<double>(p.ua_lattice.size(), 0.0));
  std::vector<double> next(x.size());
  for (std::size_t i = 0; i < p.ud_lattice.size(); ++i)
    for (std::size_t j = 0; j < p.ua_lattice.size(); ++j)
      for (std::size_t s = 0; s < p.w_nodes.size(); ++s) {
        const auto pt = p.model->point(x, p.ud_lattice[i], p.ua_lattice[j], p.w_nodes[s]);
        for (std::size_t c = 0; c < x.size(); ++c) next[c] = dyn[c].eval(pt.data());
        q[i][j] += p.w_weights[s] *
                   kernels::detail::interpolate(p.grid, v_next, p.layers, target,
                                                next.data());
      }
  return q;
}

}  // namespace

std::vector<std::vector<double>> action_values(const Problem& p,
                                               const std::vector<double>& v_next,
                                               std::size_t node, int layer) {
  const int target = p.next_layer.at(node * p.layers + layer);
  if (target < 0)
    return std::vector<std::vector<double>>(
        p.ud_lattice.size(), std::vector<double>(p.ua_lattice.size(), 0.0));
  return action_values_at(p, v_next, p.grid.node(node), target);
}

double initial_value(const ValueGrid& vg, std::span<const double> x0) {
  const Problem& p = vg.problem;
  std::string l;
  try {
    l = game::label(*p.model, x0);
  } catch (const std::domain_error&) {
    return 0.0;
  }
  if (!p.initial_props.empty() && !p.initial_props.count(l)) return 0.0;
  // Read the letter at x0 exactly, then back up once from stage 1.
  int layer = 0;
  if (p.dfa) {
    layer = p.dfa->next(p.start_layer, l);
    if (vg.stages() == 1) return p.dfa->is_accepting(layer) ? 1.0 : 0.0;
  } else {
    if (!p.safe_props.count(l)) return 0.0;
    if (vg.stages() == 1) return 1.0;
  }
  const auto q = action_values_at(p, vg.value[1], x0, layer);
  double best = 0.0;
  for (const auto& row : q) best = std::max(best, *std::min_element(row.begin(), row.end()));
  return std::clamp(best, 0.0, 1.0);
}

game::StationaryPolicy extract_policy(const ValueGrid& vg, int stage, int layer) {
  const Problem& p = vg.problem;
  const auto& choice = vg.ud_choice.at(stage);
  std::vector<std::vector<double>> table(p.grid.size());
  for (std::size_t i = 0; i < p.grid.size(); ++i)
    table[i] = p.ud_lattice[choice[i * p.layers + layer]];
  return game::StationaryPolicy::grid(game::PolicyKind::kDefender,
                                      p.model->ud_box, p.grid, std::move(table));
}

game::StationaryPolicy worst_adversary(const ValueGrid& vg, int stage, int layer) {
  const Problem& p = vg.problem;
  const std::size_t n_ud = p.ud_lattice.size();
  std::vector<int> resp(p.grid.size() * n_ud);
  for (std::size_t i = 0; i < p.grid.size(); ++i)
    for (std::size_t j = 0; j < n_ud; ++j)
      resp[i * n_ud + j] = vg.ua_response.at(stage)[(i * p.layers + layer) * n_ud + j];
  auto fn = [grid = p.grid, ud = p.ud_lattice, ua = p.ua_lattice,
             resp = std::move(resp)](std::span<const double> x,
                                     std::span<const double> u,
                                     std::span<double> out) {
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < ud.size(); ++j) {
      double d = 0.0;
      for (std::size_t c = 0; c < u.size(); ++c) d += (ud[j][c] - u[c]) * (ud[j][c] - u[c]);
      if (d < best_d) {
        best_d = d;
        best = j;
      }
    }
    const auto& a = ua[resp[grid.nearest(x) * ud.size() + best]];
    std::copy(a.begin(), a.end(), out.begin());
  };
  return game::StationaryPolicy::custom(game::PolicyKind::kAdversary,
                                        p.model->ua_box, std::move(fn),
                                        "grid best response");
}

}  // namespace safegame::dp
