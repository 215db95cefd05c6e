#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "safegame/dp.h"
#include "safegame/kernels.h"
#include "safegame/sos.h"

namespace safegame::sos {

namespace {

using poly::Polynomial;

int even_ceil(int d) { return d % 2 == 0 ? d : d + 1; }
int even_floor(int d) { return d % 2 == 0 ? d : d - 1; }

Polynomial normalized(const Polynomial& g) {
  double scale = 0.0;
  for (const auto& [m, c] : g.terms()) scale = std::max(scale, std::abs(c));
  return scale > 0.0 ? g * (1.0 / scale) : g;
}

std::vector<int> multiplier_degrees(int expr_degree,
                                    const std::vector<Polynomial>& g,
                                    int multiplier_degree) {
  int target = expr_degree;
  for (const auto& gj : g) target = std::max(target, gj.degree() + multiplier_degree);
  target = even_ceil(target);
  std::vector<int> out;
  for (const auto& gj : g) out.push_back(std::max(0, even_floor(target - gj.degree())));
  return out;
}

std::vector<std::vector<double>> ua_vertices(const game::GameModel& m) {
  std::vector<std::vector<double>> out;
  const std::size_t d = m.ua_box.size();
  for (std::size_t mask = 0; mask < (std::size_t{1} << d); ++mask) {
    std::vector<double> v(d);
    for (std::size_t i = 0; i < d; ++i)
      v[i] = (mask >> (d - 1 - i)) & 1 ? m.ua_box[i].hi : m.ua_box[i].lo;
    out.push_back(std::move(v));
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

Polynomial fix_ua(const Polynomial& p, const game::GameModel& m,
                  const std::vector<double>& ua) {
  std::vector<Polynomial> vals;
  for (double v : ua) vals.push_back(Polynomial::constant(m.universe(), v));
  std::vector<const Polynomial*> images(m.universe()->size(), nullptr);
  for (std::size_t i = 0; i < ua.size(); ++i) images[m.ua_offset() + i] = &vals[i];
  return p.substitute_all(images);
}

std::string vertex_name(const std::vector<double>& v) {
  std::ostringstream os;
  os << "drift[ua=";
  for (std::size_t i = 0; i < v.size(); ++i) os << (i ? "," : "") << v[i];
  os << "]";
  return os.str();
}

// One SOS condition "expr - sum s_j g_j" where expr is affine in the
// barrier coefficients.
struct Condition {
  std::string name;
  AffinePoly expr;
  std::vector<Polynomial> g;
  std::vector<std::size_t> vars;
  int degree = 0;
};

struct ConditionSet {
  std::vector<Condition> list;
  std::vector<poly::Monomial> barrier_basis;  // empty for a fixed barrier
};

// Builds every condition. With `fixed_B` the barrier is a constant term;
// otherwise it is the template sum_i y_i mu_i with y starting at index 0.
ConditionSet build_conditions(const game::GameModel& m, const barrier::SetUnion& init,
                              const barrier::SetUnion& unsafe, double delta,
                              double c, const std::vector<Polynomial>& policy,
                              UaMode mode, const std::optional<Polynomial>& fixed_B,
                              int barrier_degree) {
  const auto& u = m.universe();
  ConditionSet out;
  std::vector<std::size_t> xs;
  for (int i = 0; i < m.state_dim(); ++i) xs.push_back(i);

  // B as (constant, linear pieces) and its drift likewise.
  Polynomial b_const(u), d_const(u);
  std::vector<std::pair<int, Polynomial>> b_lin, d_lin;
  if (fixed_B) {
    b_const = fixed_B->rebase(u);
    d_const = barrier::drift_poly(b_const, m, policy);
  } else {
    out.barrier_basis = monomials_upto(u->size(), xs, barrier_degree);
    for (std::size_t i = 0; i < out.barrier_basis.size(); ++i) {
      const auto mu = Polynomial::monomial(u, out.barrier_basis[i]);
      b_lin.emplace_back(static_cast<int>(i), mu);
      d_lin.emplace_back(static_cast<int>(i), barrier::drift_poly(mu, m, policy));
    }
  }
  const int b_deg = fixed_B ? b_const.degree() : barrier_degree;
  auto scaled = [](std::vector<std::pair<int, Polynomial>> v, double s) {
    for (auto& [k, p] : v) p = p * s;
    return v;
  };
  auto norm_all = [](const std::vector<Polynomial>& g) {
    std::vector<Polynomial> out;
    for (const auto& gj : g) out.push_back(normalized(gj));
    return out;
  };

  for (std::size_t k = 0; k < init.size(); ++k) {
    Condition cnd;
    cnd.name = "init[" + std::to_string(k) + "]";
    cnd.expr = {Polynomial::constant(u, delta) - b_const, scaled(b_lin, -1.0)};
    cnd.g = norm_all(init[k].ineqs());
    cnd.vars = xs;
    cnd.degree = b_deg;
    out.list.push_back(std::move(cnd));
  }
  for (std::size_t k = 0; k < unsafe.size(); ++k) {
    Condition cnd;
    cnd.name = "unsafe[" + std::to_string(k) + "]";
    cnd.expr = {b_const - Polynomial::constant(u, 1.0), b_lin};
    cnd.g = norm_all(unsafe[k].ineqs());
    cnd.vars = xs;
    cnd.degree = b_deg;
    out.list.push_back(std::move(cnd));
  }

  const auto region = drift_region(m);
  auto drift_degree = [&](const Polynomial& dc,
                          const std::vector<std::pair<int, Polynomial>>& dl) {
    int d = dc.degree();
    for (const auto& [k, p] : dl) d = std::max(d, p.degree());
    return d;
  };
  if (mode == UaMode::kEndpoints) {
    if (!m.affine_in_ua())
      throw std::invalid_argument(
          "dynamics are not affine in u_a; endpoint checks are unsound");
    for (const auto& v : ua_vertices(m)) {
      Condition cnd;
      cnd.name = m.ua_dim() ? vertex_name(v) : "drift";
      auto dl = d_lin;
      for (auto& [k, p] : dl) p = -1.0 * fix_ua(p, m, v);
      const Polynomial dc = fix_ua(d_const, m, v);
      cnd.expr = {Polynomial::constant(u, c) - dc, dl};
      cnd.g = region;
      cnd.vars = xs;
      cnd.degree = drift_degree(dc, dl);
      out.list.push_back(std::move(cnd));
    }
  } else {
    Condition cnd;
    cnd.name = "drift";
    cnd.expr = {Polynomial::constant(u, c) - d_const, scaled(d_lin, -1.0)};
    cnd.g = region;
    cnd.vars = xs;
    for (int i = 0; i < m.ua_dim(); ++i) {
      cnd.vars.push_back(m.ua_offset() + i);
      const auto a = Polynomial::variable(u, m.ua_names()[i]);
      cnd.g.push_back(normalized((a - Polynomial::constant(u, m.ua_box[i].lo)) *
                                 (Polynomial::constant(u, m.ua_box[i].hi) - a)));
    }
    cnd.degree = drift_degree(d_const, d_lin);
    out.list.push_back(std::move(cnd));
  }

  Condition nonneg;
  nonneg.name = "nonnegative";
  nonneg.expr = {b_const, b_lin};
  nonneg.g = region;
  nonneg.vars = xs;
  nonneg.degree = b_deg;
  out.list.push_back(std::move(nonneg));
  return out;
}

void check_sets(const game::GameModel& m, const barrier::SetUnion& init,
                const barrier::SetUnion& unsafe) {
  if (init.empty()) throw std::invalid_argument("initial set is empty");
  if (barrier::sampled_overlap(m, init, unsafe, 101))
    throw std::invalid_argument("initial and unsafe sets overlap");
}

std::vector<Polynomial> zero_policy(const game::GameModel& m) {
  return std::vector<Polynomial>(m.ud_dim(), Polynomial(m.universe()));
}

// Least-squares fit of the pointwise best defender action for a fixed B.
std::vector<Polynomial> refit_policy(const game::GameModel& m, const Polynomial& B,
                                     int degree) {
  const auto& u = m.universe();
  std::vector<Polynomial> identity;
  for (const auto& n : m.ud_names()) identity.push_back(Polynomial::variable(u, n));
  // E[B(f(x, ud, ua, w))] with u_d left free.
  const poly::CompiledPolynomial next(barrier::drift_poly(B, m, identity) + B.rebase(u));

  const int per_axis = std::max(2, static_cast<int>(std::floor(std::pow(
                                       4000.0, 1.0 / m.state_dim()))));
  const game::StateGrid grid(m.domain_box, std::vector<int>(m.state_dim(), per_axis));
  const auto uds = dp::action_lattice(m.ud_box, 9);
  const auto uas = m.ua_dim() ? dp::action_lattice(m.ua_box, 5)
                              : std::vector<std::vector<double>>{{}};
  std::vector<std::size_t> xs;
  for (int i = 0; i < m.state_dim(); ++i) xs.push_back(i);
  const auto basis = monomials_upto(u->size(), xs, degree);

  std::vector<std::vector<double>> rows;
  std::vector<std::vector<double>> targets;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const auto x = grid.node(i);
    auto p = m.point(x);
    if (!m.state_set.contains(p)) continue;
    double best = std::numeric_limits<double>::infinity();
    std::size_t arg = 0;
    for (std::size_t a = 0; a < uds.size(); ++a) {
      double worst = -std::numeric_limits<double>::infinity();
      for (const auto& ua : uas) {
        std::copy(uds[a].begin(), uds[a].end(), p.begin() + m.ud_offset());
        std::copy(ua.begin(), ua.end(), p.begin() + m.ua_offset());
        worst = std::max(worst, next.eval(p.data()));
      }
      if (worst < best) {
        best = worst;
        arg = a;
      }
    }
    std::vector<double> row;
    const auto px = m.point(x);
    for (const auto& mu : basis)
      row.push_back(Polynomial::monomial(u, mu).eval(px));
    rows.push_back(std::move(row));
    targets.push_back(uds[arg]);
  }
  Eigen::MatrixXd A(rows.size(), basis.size());
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t k = 0; k < basis.size(); ++k) A(r, k) = rows[r][k];
  const auto qr = A.colPivHouseholderQr();
  std::vector<Polynomial> out;
  for (int d = 0; d < m.ud_dim(); ++d) {
    Eigen::VectorXd t(rows.size());
    for (std::size_t r = 0; r < rows.size(); ++r) t[r] = targets[r][d];
    Eigen::VectorXd coef = qr.solve(t);
    // Shrink toward the box centre until the fit stays inside the action box
    // on the sampled points.
    const auto& iv = m.ud_box[d];
    const double mid = 0.5 * (iv.lo + iv.hi);
    const Eigen::VectorXd vals = A * coef;
    double scale = 1.0;
    for (Eigen::Index r = 0; r < vals.size(); ++r) {
      const double v = vals[r];
      if (v > iv.hi) scale = std::min(scale, (iv.hi - mid) / (v - mid));
      if (v < iv.lo) scale = std::min(scale, (iv.lo - mid) / (v - mid));
    }
    if (scale < 1.0) {
      coef *= scale * (1.0 - 1e-6);
      if (!basis.empty()) coef[static_cast<Eigen::Index>(basis.size()) - 1] +=
          mid * (1.0 - scale * (1.0 - 1e-6));  // constant monomial is last
    }
    Polynomial s(u);
    for (std::size_t k = 0; k < basis.size(); ++k)
      s += Polynomial::monomial(u, basis[k], coef[k]);
    out.push_back(s);
  }
  return out;
}

struct Bisection {
  std::optional<Polynomial> B;
  double delta_star = 1.0;
  double delta_below = -1.0;
  std::vector<BisectionStep> steps;
};

Bisection bisect(const SynthesisSpec& spec, const game::GameModel& m,
                 const barrier::SetUnion& init, const barrier::SetUnion& unsafe,
                 const std::vector<Polynomial>& policy, double hi_start) {
  Bisection out;
  auto probe = [&](double delta) {
    const auto r = solve_at_delta(spec, m, init, unsafe, policy, delta);
    out.steps.push_back({delta, r.status, r.residual, r.iterations});
    return r;
  };
  double hi = hi_start, lo = spec.delta_lo;
  auto top = probe(hi);
  if (top.status != Status::kFeasible) return out;
  out.B = top.B;
  out.delta_star = hi;
  auto bottom = probe(lo);
  if (bottom.status == Status::kFeasible) {
    out.B = bottom.B;
    out.delta_star = lo;
    return out;
  }
  out.delta_below = lo;
  while (hi - lo > spec.delta_tol) {
    const double mid = 0.5 * (lo + hi);
    auto r = probe(mid);
    if (r.status == Status::kFeasible) {
      hi = mid;
      out.B = r.B;
      out.delta_star = mid;
    } else {
      lo = mid;
      out.delta_below = mid;
    }
  }
  return out;
}

}  // namespace

std::vector<Polynomial> drift_region(const game::GameModel& m) {
  std::vector<Polynomial> g;
  const auto src = m.state_set.is_universal()
                       ? barrier::box_set(m, m.domain_box).ineqs()
                       : m.state_set.ineqs();
  for (const auto& gj : src) g.push_back(normalized(gj));
  return g;
}

bool Prop1Report::all_feasible() const {
  return std::all_of(conditions.begin(), conditions.end(),
                     [](const ConditionCheck& c) { return c.status == Status::kFeasible; });
}

nlohmann::json Prop1Report::to_json() const {
  nlohmann::json j;
  j["all_feasible"] = all_feasible();
  j["conditions"] = nlohmann::json::array();
  for (const auto& c : conditions)
    j["conditions"].push_back({{"name", c.name},
                               {"status", to_string(c.status)},
                               {"residual", c.residual},
                               {"iterations", c.iterations}});
  return j;
}

Prop1Report verify_prop1(const Polynomial& B, const std::vector<Polynomial>& policy,
                         const std::optional<Multipliers>& mult,
                         const game::GameModel& m, const barrier::SetUnion& init,
                         const barrier::SetUnion& unsafe, double delta, double c,
                         const Prop1Options& opts) {
  const auto set = build_conditions(m, init, unsafe, delta, c, policy, opts.ua_mode,
                                    B, 0);
  const auto& conds = set.list;
  Prop1Report rep;
  rep.conditions.resize(conds.size());

  if (mult) {
    // Multipliers laid out in condition order: init members, unsafe members,
    // drift instances share `drift`, then nonnegativity.
    std::vector<const std::vector<Polynomial>*> per;
    for (const auto& v : mult->init) per.push_back(&v);
    for (const auto& v : mult->unsafe) per.push_back(&v);
    const std::size_t drift_count = conds.size() - init.size() - unsafe.size() - 1;
    for (std::size_t i = 0; i < drift_count; ++i) per.push_back(&mult->drift);
    per.push_back(&mult->nonnegative);
    if (per.size() != conds.size())
      throw std::invalid_argument("multiplier layout does not match the sets");
    std::vector<ConditionCheck> extra;
    for (std::size_t k = 0; k < conds.size(); ++k) {
      const auto& cnd = conds[k];
      const auto& s = *per[k];
      if (!s.empty() && s.size() != cnd.g.size())
        throw std::invalid_argument("condition " + cnd.name + " needs " +
                                    std::to_string(cnd.g.size()) + " multipliers");
      Polynomial p = cnd.expr.constant;
      for (std::size_t j = 0; j < s.size(); ++j) p -= s[j].rebase(m.universe()) * cnd.g[j];
      const auto r = check_sos(p, opts.solver);
      rep.conditions[k] = {cnd.name, r.status, r.residual, r.iterations};
      for (std::size_t j = 0; j < s.size(); ++j) {
        const auto rs = check_sos(s[j].rebase(m.universe()), opts.solver);
        extra.push_back({cnd.name + ".s" + std::to_string(j), rs.status, rs.residual,
                         rs.iterations});
      }
    }
    rep.conditions.insert(rep.conditions.end(), extra.begin(), extra.end());
    return rep;
  }

  kernels::map_indices(kernels::default_backend(), conds.size(), [&](std::size_t k) {
    const auto& cnd = conds[k];
    Program prog(m.universe());
    prog.add_sos_constraint(cnd.expr, cnd.g,
                            multiplier_degrees(cnd.degree, cnd.g, opts.multiplier_degree),
                            cnd.vars);
    const auto sol = prog.solve(opts.solver);
    rep.conditions[k] = {cnd.name, sol.status, sol.residual, sol.iterations};
  });
  return rep;
}

FeasibilityResult solve_at_delta(const SynthesisSpec& spec, const game::GameModel& m,
                                 const barrier::SetUnion& init,
                                 const barrier::SetUnion& unsafe,
                                 const std::vector<Polynomial>& policy,
                                 double delta) {
  const auto set = build_conditions(m, init, unsafe, delta, spec.c, policy,
                                    spec.ua_mode, std::nullopt, spec.barrier_degree);
  Program prog(m.universe());
  prog.add_free(static_cast<int>(set.barrier_basis.size()));
  for (const auto& cnd : set.list)
    prog.add_sos_constraint(cnd.expr, cnd.g,
                            multiplier_degrees(cnd.degree, cnd.g, spec.multiplier_degree),
                            cnd.vars);
  const auto sol = prog.solve(spec.solver);
  FeasibilityResult out;
  out.status = sol.status;
  out.residual = sol.residual;
  out.iterations = sol.iterations;
  if (sol.status == Status::kFeasible) {
    Polynomial B(m.universe());
    for (std::size_t i = 0; i < set.barrier_basis.size(); ++i)
      B += Polynomial::monomial(m.universe(), set.barrier_basis[i], sol.free[i]);
    out.B = B;
  }
  return out;
}

SynthesisResult synthesize(const SynthesisSpec& spec, const game::GameModel& m,
                           const barrier::SetUnion& init,
                           const barrier::SetUnion& unsafe) {
  if (spec.barrier_degree < 0 || spec.multiplier_degree < 0 ||
      spec.multiplier_degree % 2 != 0)
    throw std::invalid_argument("barrier degree must be >= 0, multiplier degree even");
  if (!(spec.delta_lo >= 0.0 && spec.delta_lo <= spec.delta_hi && spec.delta_hi <= 1.0))
    throw std::invalid_argument("delta interval must lie in [0, 1]");
  if (!(spec.delta_tol > 0.0)) throw std::invalid_argument("delta_tol must be positive");
  if (spec.c < 0.0) throw std::invalid_argument("c must be non-negative");
  check_sets(m, init, unsafe);

  auto policy = spec.initial_policy.empty() ? zero_policy(m) : spec.initial_policy;
  if (policy.size() != static_cast<std::size_t>(m.ud_dim()))
    throw std::invalid_argument("policy needs one polynomial per defender axis");

  SynthesisResult out;
  auto run = bisect(spec, m, init, unsafe, policy, spec.delta_hi);
  out.steps = run.steps;
  if (!run.B) {
    out.message = "no certificate: the SOS conditions were not shown feasible at delta = " +
                  std::to_string(spec.delta_hi) + " (" +
                  to_string(run.steps.front().status) + "); this is inconclusive";
    return out;
  }

  if (spec.policy_degree >= 0) {
    for (int round = 0; round < spec.policy_iterations; ++round) {
      auto candidate = refit_policy(m, *run.B, spec.policy_degree);
      auto next = bisect(spec, m, init, unsafe, candidate, run.delta_star);
      out.steps.insert(out.steps.end(), next.steps.begin(), next.steps.end());
      ++out.policy_rounds;
      if (!next.B || next.delta_star >= run.delta_star - spec.delta_tol) break;
      run = std::move(next);
      policy = std::move(candidate);
    }
  }

  barrier::Certificate cert;
  cert.B = *run.B;
  cert.c = spec.c;
  cert.delta = run.delta_star;
  cert.policy = policy;
  cert.provenance = barrier::Provenance::kSynthesized;
  out.delta_star = run.delta_star;
  out.delta_below = run.delta_below;
  if (spec.verify)
    out.report = barrier::verify_certificate(cert, m, init, unsafe, spec.verify_options);
  out.certificate = std::move(cert);
  out.message = "certificate found";
  return out;
}

nlohmann::json SynthesisResult::to_json() const {
  nlohmann::json j;
  j["message"] = message;
  j["delta_star"] = certificate ? nlohmann::json(delta_star) : nlohmann::json(nullptr);
  j["delta_below"] = delta_below < 0 ? nlohmann::json(nullptr) : nlohmann::json(delta_below);
  j["policy_rounds"] = policy_rounds;
  j["bisection"] = nlohmann::json::array();
  for (const auto& s : steps)
    j["bisection"].push_back({{"delta", s.delta},
                              {"status", to_string(s.status)},
                              {"residual", s.residual},
                              {"iterations", s.iterations}});
  if (certificate) j["certificate"] = barrier::certificate_to_json(*certificate);
  if (report) j["verification"] = report->to_json();
  return j;
}

}  // namespace safegame::sos
