#include "safegame/game.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <stdexcept>

#include "safegame/kernels.h"

namespace safegame::game {

bool in_box(const Box& box, std::span<const double> p, double tol) {
  if (p.size() != box.size()) return false;
  for (std::size_t i = 0; i < box.size(); ++i)
    if (!(p[i] >= box[i].lo - tol && p[i] <= box[i].hi + tol)) return false;
  return true;
}

SemialgebraicSet::SemialgebraicSet(std::vector<poly::Polynomial> ineqs)
    : ineqs_(std::move(ineqs)) {
  for (const auto& g : ineqs_) compiled_.emplace_back(g);
}

bool SemialgebraicSet::contains(std::span<const double> point,
                                double tol) const {
  for (const auto& g : compiled_)
    if (!(g.eval(point.data()) >= -tol)) return false;
  return true;
}

double SemialgebraicSet::margin(std::span<const double> point) const {
  double m = std::numeric_limits<double>::infinity();
  for (const auto& g : compiled_) m = std::min(m, g.eval(point.data()));
  return m;
}

std::vector<double> Disturbance::raw_moments(int order) const {
  switch (law) {
    case Law::kUniform:
      return poly::MomentTable::uniform(lo, hi, order);
    case Law::kGaussian:
      return poly::MomentTable::gaussian(sigma, order);
    case Law::kMoments:
      if (static_cast<int>(moments.size()) <= order)
        throw poly::InsufficientMoments(
            "disturbance moment list stops at order " +
            std::to_string(moments.size() - 1) + ", need " +
            std::to_string(order));
      return std::vector<double>(moments.begin(), moments.begin() + order + 1);
  }
  return {};
}

poly::MomentTable Disturbance::table(const std::vector<std::string>& names,
                                     int order) const {
  poly::MomentTable t;
  const auto m = raw_moments(order);
  for (const auto& n : names) t.set(n, m);
  return t;
}

double Disturbance::sample(CounterRng& rng) const {
  switch (law) {
    case Law::kUniform:
      return rng.uniform(lo, hi);
    case Law::kGaussian:
      return sigma * rng.normal();
    case Law::kMoments:
      break;
  }
  throw std::logic_error("a moments-only disturbance cannot be sampled");
}

namespace {

std::vector<std::string> block_names(const std::string& stem, int dim) {
  if (dim == 1 && stem != "x" && stem != "w") return {stem};
  std::vector<std::string> out;
  for (int i = 1; i <= dim; ++i) out.push_back(stem + std::to_string(i));
  return out;
}

bool is_identifier(const std::string& s) {
  if (s.empty() || !std::isalpha(static_cast<unsigned char>(s[0]))) return false;
  return std::all_of(s.begin(), s.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
  });
}

void check_box(const Box& box, std::size_t dim, const std::string& what,
               bool strict) {
  if (box.size() != dim)
    throw std::invalid_argument(what + " has " + std::to_string(box.size()) +
                                " intervals, expected " + std::to_string(dim));
  for (const auto& iv : box) {
    if (!std::isfinite(iv.lo) || !std::isfinite(iv.hi) || iv.lo > iv.hi ||
        (strict && iv.lo == iv.hi))
      throw std::invalid_argument(what + " has an empty or invalid interval");
  }
}

}  // namespace

GameModel::GameModel(int state_dim, int ud_dim, int ua_dim, int w_dim)
    : n_(state_dim), nd_(ud_dim), na_(ua_dim), nw_(w_dim) {
  if (state_dim < 1 || ud_dim < 0 || ua_dim < 0 || w_dim < 0)
    throw std::invalid_argument("invalid model dimensions");
  std::vector<std::string> names;
  for (const auto& block : {state_names(), ud_names(), ua_names(), w_names()})
    names.insert(names.end(), block.begin(), block.end());
  universe_ = poly::make_universe(std::move(names));
}

std::vector<std::string> GameModel::state_names() const {
  return block_names("x", n_);
}
std::vector<std::string> GameModel::ud_names() const {
  return block_names("ud", nd_);
}
std::vector<std::string> GameModel::ua_names() const {
  return block_names("ua", na_);
}
std::vector<std::string> GameModel::w_names() const {
  return block_names("w", nw_);
}

poly::Polynomial GameModel::parse(std::string_view text) const {
  return poly::parse_polynomial(text, universe_);
}

std::vector<double> GameModel::point(std::span<const double> x,
                                     std::span<const double> ud,
                                     std::span<const double> ua,
                                     std::span<const double> w) const {
  std::vector<double> p(universe_->size(), 0.0);
  auto put = [&](std::span<const double> v, std::size_t off, int dim) {
    if (v.empty()) return;
    if (v.size() != static_cast<std::size_t>(dim))
      throw std::invalid_argument("point: block size mismatch");
    std::copy(v.begin(), v.end(), p.begin() + off);
  };
  put(x, 0, n_);
  put(ud, ud_offset(), nd_);
  put(ua, ua_offset(), na_);
  put(w, w_offset(), nw_);
  return p;
}

std::vector<std::string> GameModel::propositions() const {
  std::vector<std::string> out;
  for (const auto& r : regions) out.push_back(r.prop);
  if (complement_prop) out.push_back(*complement_prop);
  return out;
}

bool GameModel::affine_in_ua() const {
  for (const auto& f : dynamics) {
    for (const auto& [m, c] : f.terms()) {
      int deg = 0;
      for (int i = 0; i < na_; ++i) deg += m[ua_offset() + i];
      if (deg > 1) return false;
    }
  }
  return true;
}

void GameModel::finalize() {
  if (!universe_) throw std::invalid_argument("model has no variables");
  warnings.clear();
  if (dynamics.size() != static_cast<std::size_t>(n_))
    throw std::invalid_argument("dynamics has " +
                                std::to_string(dynamics.size()) +
                                " components, expected " + std::to_string(n_));
  for (auto& f : dynamics) f = f.rebase(universe_);
  check_box(ud_box, nd_, "u_d box", false);
  check_box(ua_box, na_, "u_a box", false);
  check_box(domain_box, n_, "domain box", true);
  if (escape_box.empty()) escape_box = domain_box;
  check_box(escape_box, n_, "escape box", true);
  if (horizon < 1) throw std::invalid_argument("horizon must be at least 1");
  if (disturbance.law == Law::kUniform) {
    if (!(disturbance.hi > disturbance.lo) ||
        std::abs(disturbance.lo + disturbance.hi) > 1e-12)
      throw std::invalid_argument("uniform disturbance support must be [-a, a]");
  } else if (disturbance.law == Law::kGaussian) {
    if (!(disturbance.sigma >= 0.0))
      throw std::invalid_argument("gaussian sigma must be non-negative");
  } else {
    poly::MomentTable probe;
    probe.set("w", disturbance.moments);  // checks m0 = 1, m1 = 0
  }

  static const std::set<std::string> kReserved = {"T", "F", "X", "G",
                                                  "U", "N", "R"};
  std::set<std::string> seen;
  auto check_prop = [&](const std::string& p) {
    if (!is_identifier(p) || kReserved.count(p))
      throw std::invalid_argument("invalid proposition name '" + p + "'");
    if (!seen.insert(p).second)
      throw std::invalid_argument("duplicate proposition '" + p + "'");
  };
  auto check_state_only = [&](const SemialgebraicSet& s, const std::string& what) {
    for (const auto& g : s.ineqs()) {
      if (g.universe() != universe_ && *g.universe() != *universe_)
        throw std::invalid_argument(what + " is not over the model variables");
      for (std::size_t v = n_; v < universe_->size(); ++v)
        if (g.depends_on(v))
          throw std::invalid_argument(what + " depends on non-state variable '" +
                                      (*universe_)[v] + "'");
    }
  };
  for (const auto& r : regions) {
    check_prop(r.prop);
    check_state_only(r.set, "region '" + r.prop + "'");
  }
  if (complement_prop) check_prop(*complement_prop);
  if (regions.empty() && !complement_prop)
    throw std::invalid_argument("model declares no propositions");
  check_state_only(state_set, "state_set");

  // Sampling scan: every region must be hit, overlaps and gaps are reported.
  const int per_axis =
      std::max(2, static_cast<int>(std::pow(200000.0, 1.0 / n_)));
  const StateGrid scan(domain_box, std::vector<int>(n_, per_axis));
  std::vector<std::size_t> hits(regions.size(), 0);
  std::size_t overlaps = 0, gaps = 0;
  for (std::size_t i = 0; i < scan.size(); ++i) {
    const auto p = point(scan.node(i));
    int count = 0;
    for (std::size_t r = 0; r < regions.size(); ++r) {
      if (regions[r].set.contains(p)) {
        ++hits[r];
        ++count;
      }
    }
    if (count > 1) ++overlaps;
    if (count == 0) ++gaps;
  }
  for (std::size_t r = 0; r < regions.size(); ++r)
    if (hits[r] == 0)
      throw std::invalid_argument("region '" + regions[r].prop +
                                  "' has no sample point in the domain box");
  if (overlaps > 0)
    warnings.push_back(std::to_string(overlaps) +
                       " sample points lie in several regions; declared order "
                       "decides their label");
  if (gaps > 0 && !complement_prop)
    warnings.push_back(std::to_string(gaps) +
                       " sample points lie in no region and no complement is "
                       "declared");

  compiled_.clear();
  for (const auto& f : dynamics) compiled_.emplace_back(f);
}

std::vector<double> step(const GameModel& m, std::span<const double> x,
                         std::span<const double> ud, std::span<const double> ua,
                         std::span<const double> w) {
  if (x.size() != static_cast<std::size_t>(m.state_dim()) ||
      w.size() != static_cast<std::size_t>(m.w_dim()))
    throw std::invalid_argument("step: state or disturbance size mismatch");
  if (!in_box(m.ud_box, ud, 1e-9))
    throw std::domain_error("step: defender action outside its box");
  if (!in_box(m.ua_box, ua, 1e-9))
    throw std::domain_error("step: adversary action outside its box");
  const auto p = m.point(x, ud, ua, w);
  std::vector<double> next(m.state_dim());
  const auto& dyn = m.compiled_dynamics();
  if (dyn.size() != next.size())
    throw std::logic_error("step: model was not finalized");
  for (std::size_t i = 0; i < next.size(); ++i) next[i] = dyn[i].eval(p.data());
  return next;
}

std::string label(const GameModel& m, std::span<const double> x) {
  const auto p = m.point(x);
  for (const auto& r : m.regions)
    if (r.set.contains(p)) return r.prop;
  if (m.complement_prop) return *m.complement_prop;
  throw std::domain_error("label: state lies in no region");
}

StateGrid::StateGrid(Box box, std::vector<int> points)
    : box_(std::move(box)), points_(std::move(points)) {
  if (box_.size() != points_.size() || box_.empty())
    throw std::invalid_argument("grid: box and point counts disagree");
  strides_.assign(box_.size(), 1);
  size_ = 1;
  for (std::size_t a = box_.size(); a-- > 0;) {
    if (points_[a] < 2) throw std::invalid_argument("grid: need >= 2 points per axis");
    if (!(box_[a].hi > box_[a].lo)) throw std::invalid_argument("grid: empty axis");
    strides_[a] = size_;
    size_ *= static_cast<std::size_t>(points_[a]);
  }
}

double StateGrid::spacing(std::size_t axis) const {
  return box_[axis].width() / (points_[axis] - 1);
}

double StateGrid::coord(std::size_t axis, int i) const {
  if (i == points_[axis] - 1) return box_[axis].hi;
  return box_[axis].lo + i * spacing(axis);
}

std::vector<double> StateGrid::node(std::size_t index) const {
  std::vector<double> x(dim());
  for (std::size_t a = 0; a < dim(); ++a) {
    const int i = static_cast<int>((index / strides_[a]) % points_[a]);
    x[a] = coord(a, i);
  }
  return x;
}

std::size_t StateGrid::flat(std::span<const int> idx) const {
  std::size_t f = 0;
  for (std::size_t a = 0; a < dim(); ++a) f += idx[a] * strides_[a];
  return f;
}

std::size_t StateGrid::nearest(std::span<const double> x) const {
  std::size_t f = 0;
  for (std::size_t a = 0; a < dim(); ++a) {
    const double t = (x[a] - box_[a].lo) / spacing(a);
    const int i = std::clamp(static_cast<int>(std::lround(t)), 0, points_[a] - 1);
    f += i * strides_[a];
  }
  return f;
}

StationaryPolicy StationaryPolicy::constant(PolicyKind kind, Box box,
                                            std::vector<double> value) {
  if (value.size() != box.size())
    throw std::invalid_argument("constant policy: dimension mismatch");
  StationaryPolicy p;
  p.kind_ = kind;
  p.box_ = std::move(box);
  p.fn_ = [value](std::span<const double>, std::span<const double>,
                  std::span<double> out) {
    std::copy(value.begin(), value.end(), out.begin());
  };
  p.description_ = "constant";
  return p;
}

StationaryPolicy StationaryPolicy::polynomial(
    PolicyKind kind, const GameModel& m,
    std::vector<poly::Polynomial> components) {
  const Box& box = kind == PolicyKind::kDefender ? m.ud_box : m.ua_box;
  if (components.size() != box.size())
    throw std::invalid_argument("polynomial policy: dimension mismatch");
  const std::size_t allowed_end =
      kind == PolicyKind::kDefender ? m.ud_offset() : m.ua_offset();
  std::vector<poly::CompiledPolynomial> compiled;
  for (auto& c : components) {
    c = c.rebase(m.universe());
    for (std::size_t v = allowed_end; v < m.universe()->size(); ++v)
      if (c.depends_on(v))
        throw std::invalid_argument("policy depends on '" +
                                    (*m.universe())[v] + "'");
    compiled.emplace_back(c);
  }
  StationaryPolicy p;
  p.kind_ = kind;
  p.box_ = box;
  p.polys_ = std::move(components);
  const std::size_t usize = m.universe()->size(), ud_off = m.ud_offset();
  const int n = m.state_dim();
  p.fn_ = [compiled, usize, ud_off, n](std::span<const double> x,
                                       std::span<const double> ud,
                                       std::span<double> out) {
    std::vector<double> pt(usize, 0.0);
    std::copy(x.begin(), x.begin() + n, pt.begin());
    std::copy(ud.begin(), ud.end(), pt.begin() + ud_off);
    for (std::size_t i = 0; i < compiled.size(); ++i)
      out[i] = compiled[i].eval(pt.data());
  };
  p.description_ = "polynomial";
  return p;
}

StationaryPolicy StationaryPolicy::grid(PolicyKind kind, Box box,
                                        StateGrid grid,
                                        std::vector<std::vector<double>> table) {
  if (table.size() != grid.size())
    throw std::invalid_argument("grid policy: table size mismatch");
  for (const auto& a : table)
    if (a.size() != box.size())
      throw std::invalid_argument("grid policy: action dimension mismatch");
  StationaryPolicy p;
  p.kind_ = kind;
  p.box_ = std::move(box);
  p.fn_ = [grid = std::move(grid), table = std::move(table)](
              std::span<const double> x, std::span<const double>,
              std::span<double> out) {
    const auto& a = table[grid.nearest(x)];
    std::copy(a.begin(), a.end(), out.begin());
  };
  p.description_ = "grid";
  return p;
}

StationaryPolicy StationaryPolicy::custom(PolicyKind kind, Box box, Fn fn,
                                          std::string description) {
  StationaryPolicy p;
  p.kind_ = kind;
  p.box_ = std::move(box);
  p.fn_ = std::move(fn);
  p.description_ = std::move(description);
  return p;
}

StationaryPolicy StationaryPolicy::zero(PolicyKind kind, const GameModel& m) {
  const Box& box = kind == PolicyKind::kDefender ? m.ud_box : m.ua_box;
  return constant(kind, box, std::vector<double>(box.size(), 0.0));
}

void StationaryPolicy::act(std::span<const double> x,
                           std::span<const double> ud,
                           std::span<double> out) const {
  if (!fn_) throw std::logic_error("empty policy");
  fn_(x, ud, out);
  for (std::size_t i = 0; i < box_.size(); ++i)
    out[i] = std::clamp(out[i], box_[i].lo, box_[i].hi);
}

std::vector<double> StationaryPolicy::operator()(
    std::span<const double> x, std::span<const double> ud) const {
  std::vector<double> out(box_.size());
  act(x, ud, out);
  return out;
}

Trajectory simulate(const GameModel& m, const StationaryPolicy& defender,
                    const StationaryPolicy& adversary,
                    std::span<const double> x0, std::uint64_t seed,
                    std::uint64_t stream) {
  if (!in_box(m.escape_box, x0))
    throw std::invalid_argument("simulate: initial state outside the box");
  CounterRng rng(seed, stream);
  Trajectory t;
  std::vector<double> x(x0.begin(), x0.end());
  std::vector<double> ud(m.ud_dim()), ua(m.ua_dim()), w(m.w_dim());
  const int n_steps = m.horizon;
  for (int k = 0; k < n_steps; ++k) {
    if (t.escaped_at >= 0) {
      t.trace.push_back(*m.complement_prop);
      continue;
    }
    t.states.push_back(x);
    t.trace.push_back(label(m, x));
    if (k + 1 == n_steps) break;
    defender.act(x, {}, ud);
    adversary.act(x, ud, ua);
    for (auto& wi : w) wi = m.disturbance.sample(rng);
    x = step(m, x, ud, ua, w);
    const bool finite =
        std::all_of(x.begin(), x.end(), [](double v) { return std::isfinite(v); });
    if (!finite || !in_box(m.escape_box, x)) {
      if (!m.complement_prop)
        throw std::domain_error(
            "simulate: state left the escape box and the model declares no "
            "complement proposition");
      t.escaped_at = k + 1;
      t.states.push_back(x);
    }
  }
  return t;
}

SampleStats SampleStats::from_counts(std::int64_t hits, std::int64_t samples,
                                     std::int64_t escapes) {
  if (samples < 1) throw std::invalid_argument("sample count must be >= 1");
  SampleStats s;
  s.samples = samples;
  s.escapes = escapes;
  s.estimate = static_cast<double>(hits) / static_cast<double>(samples);
  s.ci_halfwidth =
      1.96 * std::sqrt(s.estimate * (1.0 - s.estimate) / samples);
  return s;
}

SampleStats estimate_satisfaction(const GameModel& m, const formula::Formula& f,
                                  const StationaryPolicy& defender,
                                  const StationaryPolicy& adversary,
                                  std::span<const double> x0,
                                  std::int64_t samples, std::uint64_t seed) {
  if (samples < 1) throw std::invalid_argument("sample count must be >= 1");
  const auto dfa = automaton::ltlf_to_dfa(f, m.propositions());
  std::vector<std::uint8_t> ok(samples, 0), escaped(samples, 0);
  const std::vector<double> start(x0.begin(), x0.end());
  kernels::map_indices(
      kernels::default_backend(), static_cast<std::size_t>(samples),
      [&](std::size_t i) {
        const auto t = simulate(m, defender, adversary, start, seed, i);
        const bool by_eval = formula::evaluate(f, t.trace);
        const bool by_dfa = automaton::accepts(dfa, t.trace);
        if (by_eval != by_dfa)
          throw std::logic_error("formula evaluation and automaton disagree");
        ok[i] = by_eval;
        escaped[i] = t.escaped_at >= 0;
      });
  std::int64_t hits = 0, esc = 0;
  for (std::int64_t i = 0; i < samples; ++i) {
    hits += ok[i];
    esc += escaped[i];
  }
  return SampleStats::from_counts(hits, samples, esc);
}

SampleStats estimate_reach(const GameModel& m,
                           const std::vector<SemialgebraicSet>& targets,
                           const StationaryPolicy& defender,
                           const StationaryPolicy& adversary,
                           std::span<const double> x0, std::int64_t samples,
                           std::uint64_t seed) {
  if (samples < 1) throw std::invalid_argument("sample count must be >= 1");
  std::vector<std::uint8_t> hit(samples, 0), escaped(samples, 0);
  const std::vector<double> start(x0.begin(), x0.end());
  kernels::map_indices(
      kernels::default_backend(), static_cast<std::size_t>(samples),
      [&](std::size_t i) {
        const auto t = simulate(m, defender, adversary, start, seed, i);
        for (std::size_t k = 0;
             k < t.states.size() && k < static_cast<std::size_t>(m.horizon); ++k)
          if (std::any_of(targets.begin(), targets.end(),
                          [&](const SemialgebraicSet& s) {
                            return s.contains(m.point(t.states[k]));
                          })) {
            hit[i] = 1;
            break;
          }
        escaped[i] = t.escaped_at >= 0;
      });
  std::int64_t hits = 0, esc = 0;
  for (std::int64_t i = 0; i < samples; ++i) {
    hits += hit[i];
    esc += escaped[i];
  }
  return SampleStats::from_counts(hits, samples, esc);
}

}  // namespace safegame::game
