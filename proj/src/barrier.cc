#include "safegame/barrier.h"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>

#include "safegame/dp.h"
#include "safegame/kernels.h"

namespace safegame::barrier {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr std::size_t kMaxGridNodes = 4'000'000;

void require_state_only(const poly::Polynomial& p, const game::GameModel& m,
                        const std::string& what) {
  for (std::size_t v = m.state_dim(); v < p.num_vars(); ++v)
    if (p.depends_on(v))
      throw std::invalid_argument(what + " may depend on the state only");
}

int capped_points(int requested, std::size_t dim) {
  const double cap = std::floor(
      std::pow(static_cast<double>(kMaxGridNodes), 1.0 / static_cast<double>(dim)));
  return std::max(2, std::min(requested, static_cast<int>(cap)));
}

bool in_union(const SetUnion& u, std::span<const double> p) {
  return std::any_of(u.begin(), u.end(),
                     [&](const game::SemialgebraicSet& s) { return s.contains(p); });
}

double union_margin(const SetUnion& u, std::span<const double> p) {
  double best = -kInf;
  for (const auto& s : u) best = std::max(best, s.margin(p));
  return best;
}

std::vector<std::vector<double>> box_vertices(const game::Box& box) {
  std::vector<std::vector<double>> out;
  const std::size_t d = box.size();
  for (std::size_t mask = 0; mask < (std::size_t{1} << d); ++mask) {
    std::vector<double> v(d);
    for (std::size_t i = 0; i < d; ++i)
      v[i] = (mask >> (d - 1 - i)) & 1 ? box[i].hi : box[i].lo;
    out.push_back(std::move(v));
  }
  // Degenerate axes produce duplicates.
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

game::StateGrid domain_grid(const game::GameModel& m, int points) {
  const int p = capped_points(points, m.state_dim());
  return game::StateGrid(m.domain_box, std::vector<int>(m.state_dim(), p));
}

std::string provenance_name(Provenance p) {
  return p == Provenance::kSynthesized ? "synthesized" : "user-supplied";
}

}  // namespace

void Certificate::validate(const game::GameModel& m) const {
  if (!(c >= 0.0)) throw std::invalid_argument("certificate c must be >= 0");
  if (!(delta >= 0.0 && delta <= 1.0))
    throw std::invalid_argument("certificate delta must lie in [0, 1]");
  if (B.universe() != m.universe() && *B.universe() != *m.universe())
    throw std::invalid_argument("certificate B is not over the model variables");
  require_state_only(B, m, "B");
  if (policy.size() != static_cast<std::size_t>(m.ud_dim()))
    throw std::invalid_argument("policy needs one polynomial per defender axis");
  for (const auto& s : policy) require_state_only(s, m, "the defender policy");
}

Certificate certificate_from_json(const nlohmann::json& j,
                                  const game::GameModel& m) {
  Certificate cert;
  try {
    cert.B = m.parse(j.at("B").get<std::string>());
    cert.c = j.value("c", 0.0);
    cert.delta = j.value("delta", 1.0);
    if (j.contains("policy")) {
      for (const auto& s : j.at("policy")) cert.policy.push_back(m.parse(s.get<std::string>()));
    } else {
      for (int i = 0; i < m.ud_dim(); ++i)
        cert.policy.push_back(poly::Polynomial(m.universe()));
    }
    const std::string prov = j.value("provenance", "user-supplied");
    if (prov == "synthesized") {
      cert.provenance = Provenance::kSynthesized;
    } else if (prov == "user-supplied") {
      cert.provenance = Provenance::kUserSupplied;
    } else {
      throw std::invalid_argument("unknown provenance '" + prov + "'");
    }
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("certificate: ") + e.what());
  }
  cert.validate(m);
  return cert;
}

nlohmann::json certificate_to_json(const Certificate& cert) {
  nlohmann::json j;
  j["B"] = poly::to_string(cert.B);
  j["c"] = cert.c;
  j["delta"] = cert.delta;
  j["policy"] = nlohmann::json::array();
  for (const auto& s : cert.policy) j["policy"].push_back(poly::to_string(s));
  j["provenance"] = provenance_name(cert.provenance);
  return j;
}

poly::Polynomial drift_poly(const poly::Polynomial& B, const game::GameModel& m,
                            const std::vector<poly::Polynomial>& policy) {
  if (policy.size() != static_cast<std::size_t>(m.ud_dim()))
    throw std::invalid_argument("policy needs one polynomial per defender axis");
  const auto& u = m.universe();
  const poly::Polynomial b = B.rebase(u);
  std::vector<poly::Polynomial> pol;
  for (const auto& s : policy) pol.push_back(s.rebase(u));

  std::vector<const poly::Polynomial*> ud_images(u->size(), nullptr);
  for (int i = 0; i < m.ud_dim(); ++i) ud_images[m.ud_offset() + i] = &pol[i];
  std::vector<poly::Polynomial> closed;
  for (const auto& f : m.dynamics) closed.push_back(f.substitute_all(ud_images));

  std::vector<const poly::Polynomial*> x_images(u->size(), nullptr);
  for (int i = 0; i < m.state_dim(); ++i) x_images[i] = &closed[i];
  poly::Polynomial next = b.substitute_all(x_images);

  if (m.w_dim() > 0) {
    int order = 0;
    for (int i = 0; i < m.w_dim(); ++i)
      order = std::max(order, next.degree_in(m.w_offset() + i));
    next = poly::expect_w(next, m.disturbance.table(m.w_names(), std::max(order, 1)));
  }
  return next - b;
}

game::SemialgebraicSet box_set(const game::GameModel& m, const game::Box& box) {
  if (box.size() != static_cast<std::size_t>(m.state_dim()))
    throw std::invalid_argument("box_set: box dimension mismatch");
  std::vector<poly::Polynomial> g;
  for (int i = 0; i < m.state_dim(); ++i) {
    const auto x = poly::Polynomial::variable(m.universe(), m.state_names()[i]);
    g.push_back((x - poly::Polynomial::constant(m.universe(), box[i].lo)) *
                (poly::Polynomial::constant(m.universe(), box[i].hi) - x));
  }
  return game::SemialgebraicSet(std::move(g));
}

game::SemialgebraicSet complement_set(const game::GameModel& m) {
  auto g = box_set(m, m.domain_box).ineqs();
  for (const auto& r : m.regions)
    if (r.set.ineqs().size() == 1) g.push_back(-r.set.ineqs().front());
  return game::SemialgebraicSet(std::move(g));
}

SetUnion preimage(const game::GameModel& m,
                  const std::vector<std::string>& letters) {
  SetUnion out;
  for (const auto& a : letters) {
    auto it = std::find_if(m.regions.begin(), m.regions.end(),
                           [&](const game::Region& r) { return r.prop == a; });
    if (it != m.regions.end()) {
      out.push_back(it->set);
    } else if (m.complement_prop && *m.complement_prop == a) {
      out.push_back(complement_set(m));
    } else {
      throw std::invalid_argument("unknown proposition '" + a + "'");
    }
  }
  return out;
}

TripleSets triple_sets(const game::GameModel& m, const automaton::Dfa& dfa,
                       const automaton::TriplePath& t) {
  std::vector<std::string> in, out;
  for (std::size_t a = 0; a < dfa.alphabet().size(); ++a) {
    if (dfa.next(t.q, a) == t.q_mid) in.push_back(dfa.alphabet()[a]);
    if (dfa.next(t.q_mid, a) == t.q_end) out.push_back(dfa.alphabet()[a]);
  }
  if (in.empty() || out.empty())
    throw std::invalid_argument("triple does not follow automaton transitions");
  return {preimage(m, in), preimage(m, out)};
}

std::optional<std::vector<double>> sampled_overlap(const game::GameModel& m,
                                                   const SetUnion& a,
                                                   const SetUnion& b,
                                                   int points_per_axis) {
  const auto grid = domain_grid(m, points_per_axis);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const auto x = grid.node(i);
    const auto p = m.point(x);
    if (union_margin(a, p) > 1e-12 && union_margin(b, p) > 1e-12) return x;
  }
  return std::nullopt;
}

GridExtremum grid_max(const poly::Polynomial& p, const game::GameModel& m,
                      const SetUnion& sets, int points_per_axis) {
  const auto grid = domain_grid(m, points_per_axis);
  const poly::CompiledPolynomial cp(p.rebase(m.universe()));
  std::vector<double> val(grid.size(), -kInf);
  kernels::map_indices(kernels::default_backend(), grid.size(),
                       [&](std::size_t i) {
                         const auto pt = m.point(grid.node(i));
                         if (in_union(sets, pt)) val[i] = cp.eval(pt.data());
                       });
  GridExtremum best;
  best.value = -kInf;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (val[i] > best.value) {
      best.value = val[i];
      best.at = grid.node(i);
      best.found = true;
    }
  }
  return best;
}

namespace {

struct MarginFn {
  // Returns +inf outside the condition's set; writes the worst u_a index.
  std::function<double(std::span<const double> x, int* ua_index)> eval;
};

void run_condition(ConditionResult& res, const MarginFn& fn,
                   const game::StateGrid& grid,
                   const std::vector<std::vector<double>>& ua_list,
                   const VerifyOptions& opts) {
  const std::size_t n = grid.size();
  std::vector<double> margin(n, kInf);
  std::vector<int> ua_idx(n, -1);
  kernels::map_indices(kernels::default_backend(), n, [&](std::size_t i) {
    const auto x = grid.node(i);
    margin[i] = fn.eval(x, &ua_idx[i]);
  });

  res.worst_margin = kInf;
  std::size_t worst = n;
  for (std::size_t i = 0; i < n; ++i) {
    if (margin[i] == kInf) continue;
    ++res.points;
    if (margin[i] < res.worst_margin) {
      res.worst_margin = margin[i];
      worst = i;
    }
  }

  // Difference quotients along each axis between sampled neighbours.
  const std::size_t d = grid.dim();
  std::vector<std::size_t> stride(d, 1);
  for (std::size_t k = d; k-- > 1;)
    stride[k - 1] = stride[k] * static_cast<std::size_t>(grid.points()[k]);
  for (std::size_t i = 0; i < n; ++i) {
    if (margin[i] == kInf) continue;
    for (std::size_t k = 0; k < d; ++k) {
      const std::size_t pos = (i / stride[k]) % grid.points()[k];
      if (pos + 1 >= static_cast<std::size_t>(grid.points()[k])) continue;
      const std::size_t j = i + stride[k];
      if (margin[j] == kInf) continue;
      res.lipschitz = std::max(
          res.lipschitz, std::abs(margin[j] - margin[i]) / grid.spacing(k));
    }
  }

  if (worst == n) {
    res.pass = true;
    return;
  }
  std::vector<double> best_x = grid.node(worst);
  int best_ua = ua_idx[worst];

  // Local refinement on a lattice `refine` times finer around the worst node.
  if (opts.refine > 1) {
    const int r = opts.refine;
    const int side = 2 * r + 1;
    std::size_t total = 1;
    for (std::size_t k = 0; k < d; ++k) total *= side;
    const auto centre = grid.node(worst);
    std::vector<double> x(d);
    for (std::size_t t = 0; t < total; ++t) {
      std::size_t rem = t;
      bool inside = true;
      for (std::size_t k = d; k-- > 0;) {
        const int off = static_cast<int>(rem % side) - r;
        rem /= side;
        x[k] = centre[k] + off * grid.spacing(k) / r;
        const auto& iv = grid.box()[k];
        if (x[k] < iv.lo || x[k] > iv.hi) inside = false;
      }
      if (!inside) continue;
      int ui = -1;
      const double v = fn.eval(x, &ui);
      if (v == kInf) continue;
      ++res.points;
      if (v < res.worst_margin) {
        res.worst_margin = v;
        best_x = x;
        best_ua = ui;
      }
    }
  }
  res.witness = best_x;
  if (best_ua >= 0) res.witness_ua = ua_list[best_ua];
  res.pass = res.worst_margin >= -opts.tolerance;
}

}  // namespace

VerificationReport verify_certificate(const Certificate& cert,
                                      const game::GameModel& m,
                                      const SetUnion& init,
                                      const SetUnion& unsafe,
                                      const VerifyOptions& opts) {
  cert.validate(m);
  if (sampled_overlap(m, init, unsafe, std::min(opts.grid_points, 101)))
    throw std::invalid_argument("initial and unsafe sets overlap");
  VerificationReport rep;
  const auto grid = domain_grid(m, opts.grid_points);
  rep.grid_points = grid.points().front();
  for (std::size_t k = 0; k < grid.dim(); ++k) rep.spacing.push_back(grid.spacing(k));

  UaCheck mode = opts.ua_check;
  if (mode == UaCheck::kAuto)
    mode = m.affine_in_ua() ? UaCheck::kEndpoints : UaCheck::kGrid;
  rep.ua_check = mode == UaCheck::kEndpoints ? "endpoints" : "grid";
  if (m.ua_dim() == 0) {
    rep.ua_checked = {{}};
  } else if (mode == UaCheck::kEndpoints) {
    rep.ua_checked = box_vertices(m.ua_box);
  } else {
    rep.ua_checked = dp::action_lattice(m.ua_box, opts.ua_grid_points);
  }

  const poly::CompiledPolynomial B(cert.B.rebase(m.universe()));
  const poly::CompiledPolynomial D(drift_poly(cert.B, m, cert.policy));
  const auto& ua_list = rep.ua_checked;
  const auto& state_set = m.state_set;

  rep.init.name = "init";
  run_condition(rep.init, {[&](std::span<const double> x, int*) {
                  const auto p = m.point(x);
                  return in_union(init, p) ? cert.delta - B.eval(p.data()) : kInf;
                }},
                grid, ua_list, opts);
  rep.unsafe.name = "unsafe";
  run_condition(rep.unsafe, {[&](std::span<const double> x, int*) {
                  const auto p = m.point(x);
                  return in_union(unsafe, p) ? B.eval(p.data()) - 1.0 : kInf;
                }},
                grid, ua_list, opts);
  rep.drift.name = "drift";
  run_condition(rep.drift, {[&](std::span<const double> x, int* ui) {
                  auto p = m.point(x);
                  if (!state_set.contains(p)) return kInf;
                  double worst = kInf;
                  for (std::size_t j = 0; j < ua_list.size(); ++j) {
                    std::copy(ua_list[j].begin(), ua_list[j].end(),
                              p.begin() + m.ua_offset());
                    const double v = cert.c - D.eval(p.data());
                    if (v < worst) {
                      worst = v;
                      *ui = static_cast<int>(j);
                    }
                  }
                  return worst;
                }},
                grid, ua_list, opts);
  rep.nonnegative.name = "nonnegative";
  run_condition(rep.nonnegative, {[&](std::span<const double> x, int*) {
                  const auto p = m.point(x);
                  return B.eval(p.data());
                }},
                grid, ua_list, opts);

  if (m.ud_dim() > 0) {
    std::vector<poly::CompiledPolynomial> pol;
    for (const auto& s : cert.policy) pol.emplace_back(s.rebase(m.universe()));
    for (std::size_t i = 0; i < grid.size() && rep.policy_in_box; ++i) {
      const auto p = m.point(grid.node(i));
      if (!state_set.contains(p)) continue;
      for (int k = 0; k < m.ud_dim(); ++k) {
        const double u = pol[k].eval(p.data());
        if (u < m.ud_box[k].lo - 1e-9 || u > m.ud_box[k].hi + 1e-9) {
          rep.policy_in_box = false;
          break;
        }
      }
    }
  }
  return rep;
}

nlohmann::json VerificationReport::to_json() const {
  auto cond = [](const ConditionResult& r) {
    nlohmann::json j;
    j["pass"] = r.pass;
    j["points"] = r.points;
    if (std::isfinite(r.worst_margin)) {
      j["worst_margin"] = r.worst_margin;
      j["witness"] = r.witness;
    } else {
      j["worst_margin"] = nullptr;
    }
    if (!r.witness_ua.empty()) j["witness_ua"] = r.witness_ua;
    j["lipschitz_estimate"] = r.lipschitz;
    return j;
  };
  nlohmann::json j;
  j["passed"] = passed();
  j["grid_points"] = grid_points;
  j["spacing"] = spacing;
  j["ua_check"] = ua_check;
  j["ua_checked"] = ua_checked;
  j["policy_in_box"] = policy_in_box;
  j["conditions"] = {{"init", cond(init)},
                     {"unsafe", cond(unsafe)},
                     {"drift", cond(drift)},
                     {"nonnegative", cond(nonnegative)}};
  return j;
}

double reachability_bound(double b_x0, double c, int horizon, double lambda) {
  if (!(lambda > 0.0)) throw std::invalid_argument("lambda must be positive");
  if (c < 0.0 || horizon < 0)
    throw std::invalid_argument("c and horizon must be non-negative");
  return std::clamp((b_x0 + c * horizon) / lambda, 0.0, 1.0);
}

double satisfaction_lower_bound(
    const automaton::Dfa& dfa_neg, int horizon, const std::string& a_j,
    const std::map<automaton::TriplePath, TripleBound>& per_triple) {
  const auto runs =
      automaton::runs_from_label(automaton::enumerate_runs(dfa_neg, horizon), a_j);
  double total = 0.0;
  for (const auto& run : runs) {
    double prod = 1.0;
    for (const auto& t : automaton::triple_paths(run, horizon, dfa_neg)) {
      auto it = per_triple.find(t);
      if (it == per_triple.end())
        throw std::invalid_argument(
            "no bound for triple (" + dfa_neg.state_name(t.q) + "," +
            dfa_neg.state_name(t.q_mid) + "," + dfa_neg.state_name(t.q_end) +
            "," + std::to_string(t.loop_bound) + ")");
      prod *= std::clamp(it->second.delta + it->second.c * t.loop_bound, 0.0, 1.0);
    }
    total += prod;
  }
  return std::clamp(1.0 - total, 0.0, 1.0);
}

game::SampleStats empirical_s_reachability(
    const game::GameModel& m, const game::StationaryPolicy& defender,
    const game::StationaryPolicy& adversary, const SetUnion& unsafe,
    std::span<const double> x0, std::int64_t samples, std::uint64_t seed) {
  return game::estimate_reach(m, unsafe, defender, adversary, x0, samples, seed);
}

}  // namespace safegame::barrier
