#include "safegame/sos.h"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

namespace safegame::sos {

std::string to_string(Status s) {
  switch (s) {
    case Status::kFeasible:
      return "feasible";
    case Status::kBudgetExhausted:
      return "budget-exhausted";
    case Status::kLikelyInfeasible:
      return "likely-infeasible";
    case Status::kInfeasible:
      return "infeasible";
  }
  return "unknown";
}

namespace {

constexpr double kSqrt2 = 1.4142135623730951;
constexpr int kPolishEvery = 250;

poly::Monomial add(const poly::Monomial& a, const poly::Monomial& b) {
  poly::Monomial out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] + b[i];
  return out;
}

int total(const poly::Monomial& m) {
  int s = 0;
  for (int e : m) s += e;
  return s;
}

std::size_t svec_size(std::size_t s) { return s * (s + 1) / 2; }

Eigen::MatrixXd unpack(const Eigen::VectorXd& v, std::size_t off, std::size_t s) {
  Eigen::MatrixXd q(s, s);
  std::size_t k = off;
  for (std::size_t a = 0; a < s; ++a) {
    for (std::size_t b = a; b < s; ++b, ++k) {
      const double x = a == b ? v[k] : v[k] / kSqrt2;
      q(a, b) = x;
      q(b, a) = x;
    }
  }
  return q;
}

void pack(const Eigen::MatrixXd& q, Eigen::VectorXd& v, std::size_t off) {
  const auto s = static_cast<std::size_t>(q.rows());
  std::size_t k = off;
  for (std::size_t a = 0; a < s; ++a)
    for (std::size_t b = a; b < s; ++b, ++k)
      v[k] = a == b ? q(a, a) : kSqrt2 * 0.5 * (q(a, b) + q(b, a));
}

Eigen::MatrixXd psd_part(const Eigen::MatrixXd& q) {
  if (q.rows() <= 1) return q.cwiseMax(0.0);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(q);
  const Eigen::VectorXd lam = es.eigenvalues().cwiseMax(0.0);
  return es.eigenvectors() * lam.asDiagonal() * es.eigenvectors().transpose();
}

double min_eigenvalue(const Eigen::MatrixXd& q) {
  if (q.rows() == 0) return 0.0;
  if (q.rows() == 1) return q(0, 0);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(q, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

}  // namespace

int Program::add_free(int n) {
  if (n < 0) throw std::invalid_argument("negative free-variable count");
  const int first = num_free_;
  num_free_ += n;
  return first;
}

int Program::add_block(std::vector<poly::Monomial> basis) {
  for (const auto& m : basis)
    if (m.size() != universe_->size())
      throw std::invalid_argument("basis monomial has the wrong arity");
  blocks_.push_back(std::move(basis));
  return static_cast<int>(blocks_.size()) - 1;
}

void Program::add_identity(AffinePoly expr, std::vector<Term> grams) {
  expr.constant = expr.constant.is_zero() && !expr.constant.universe()
                      ? poly::Polynomial(universe_)
                      : expr.constant.rebase(universe_);
  for (auto& [k, p] : expr.linear) {
    if (k < 0 || k >= num_free_) throw std::invalid_argument("unknown free variable");
    p = p.rebase(universe_);
  }
  for (auto& t : grams) {
    if (t.block < 0 || t.block >= static_cast<int>(blocks_.size()))
      throw std::invalid_argument("unknown Gram block");
    t.factor = t.factor.rebase(universe_);
  }
  identities_.push_back({std::move(expr), std::move(grams)});
}

std::vector<poly::Monomial> monomials_upto(std::size_t universe_size,
                                           const std::vector<std::size_t>& vars,
                                           int max_degree) {
  std::vector<poly::Monomial> out;
  poly::Monomial cur(universe_size, 0);
  std::function<void(std::size_t, int)> rec = [&](std::size_t i, int left) {
    if (i == vars.size()) {
      out.push_back(cur);
      return;
    }
    for (int e = 0; e <= left; ++e) {
      cur[vars[i]] = e;
      rec(i + 1, left - e);
    }
    cur[vars[i]] = 0;
  };
  if (max_degree >= 0) rec(0, max_degree);
  std::sort(out.begin(), out.end(), poly::GradedLex{});
  return out;
}

std::vector<poly::Monomial> prune_basis(std::vector<poly::Monomial> basis,
                                        const std::vector<poly::Monomial>& support) {
  if (support.empty()) return {};
  const std::size_t nv = support.front().size();
  std::vector<int> lo(nv, 1 << 30), hi(nv, 0);
  int dlo = 1 << 30, dhi = 0;
  for (const auto& m : support) {
    for (std::size_t i = 0; i < nv; ++i) {
      lo[i] = std::min(lo[i], m[i]);
      hi[i] = std::max(hi[i], m[i]);
    }
    dlo = std::min(dlo, total(m));
    dhi = std::max(dhi, total(m));
  }
  std::erase_if(basis, [&](const poly::Monomial& a) {
    for (std::size_t i = 0; i < nv; ++i)
      if (2 * a[i] < lo[i] || 2 * a[i] > hi[i]) return true;
    const int d = 2 * total(a);
    return d < dlo || d > dhi;
  });

  const std::set<poly::Monomial> supp(support.begin(), support.end());
  bool changed = true;
  while (changed) {
    changed = false;
    std::set<poly::Monomial> cross;
    for (std::size_t i = 0; i < basis.size(); ++i)
      for (std::size_t j = i + 1; j < basis.size(); ++j)
        cross.insert(add(basis[i], basis[j]));
    const auto before = basis.size();
    std::erase_if(basis, [&](const poly::Monomial& a) {
      const auto sq = add(a, a);
      return !supp.count(sq) && !cross.count(sq);
    });
    changed = basis.size() != before;
  }
  return basis;
}

int Program::add_sos_constraint(const AffinePoly& expr,
                                const std::vector<poly::Polynomial>& g,
                                const std::vector<int>& multiplier_degrees,
                                const std::vector<std::size_t>& vars) {
  if (g.size() != multiplier_degrees.size())
    throw std::invalid_argument("one multiplier degree per inequality");
  const std::size_t nv = universe_->size();
  std::set<poly::Monomial> support;
  auto collect = [&](const poly::Polynomial& p) {
    const auto q = p.rebase(universe_);
    for (const auto& [m, c] : q.terms()) support.insert(m);
  };
  if (expr.constant.universe()) collect(expr.constant);
  for (const auto& [k, p] : expr.linear) collect(p);

  std::vector<Term> terms;
  for (std::size_t j = 0; j < g.size(); ++j) {
    if (multiplier_degrees[j] < 0) continue;
    if (multiplier_degrees[j] % 2 != 0)
      throw std::invalid_argument("SOS multiplier degree must be even");
    auto basis = monomials_upto(nv, vars, multiplier_degrees[j] / 2);
    const poly::Polynomial gj = g[j].rebase(universe_);
    for (const auto& a : basis)
      for (const auto& b : basis)
        for (const auto& [m, c] : gj.terms()) support.insert(add(add(a, b), m));
    const int id = add_block(std::move(basis));
    terms.push_back({id, -1.0 * gj});
  }

  int max_deg = 0;
  for (const auto& m : support) max_deg = std::max(max_deg, total(m));
  auto basis = prune_basis(monomials_upto(nv, vars, max_deg / 2),
                           {support.begin(), support.end()});
  const int main = add_block(std::move(basis));
  terms.push_back({main, poly::Polynomial::constant(universe_, -1.0)});

  AffinePoly e = expr;
  if (!e.constant.universe()) e.constant = poly::Polynomial(universe_);
  add_identity(std::move(e), std::move(terms));
  return main;
}

Program::Solution Program::solve(const SolverOptions& opts) const {
  // Column layout: free scalars, then each block's svec.
  std::vector<std::size_t> offset(blocks_.size());
  std::size_t n = static_cast<std::size_t>(num_free_);
  for (std::size_t b = 0; b < blocks_.size(); ++b) {
    offset[b] = n;
    n += svec_size(blocks_[b].size());
  }

  struct Entry {
    int row;
    int col;
    double value;
  };
  std::vector<Entry> trip;
  std::vector<double> rhs;
  for (const auto& id : identities_) {
    std::map<poly::Monomial, int, poly::GradedLex> rows;
    auto row = [&](const poly::Monomial& m) {
      auto [it, fresh] = rows.emplace(m, static_cast<int>(rhs.size()));
      if (fresh) rhs.push_back(0.0);
      return it->second;
    };
    for (const auto& [m, c] : id.expr.constant.terms()) rhs[row(m)] -= c;
    for (const auto& [k, p] : id.expr.linear)
      for (const auto& [m, c] : p.terms()) trip.push_back({row(m), k, c});
    for (const auto& t : id.grams) {
      const auto& basis = blocks_[t.block];
      const std::size_t s = basis.size();
      std::size_t col = offset[t.block];
      for (std::size_t a = 0; a < s; ++a) {
        for (std::size_t b = a; b < s; ++b, ++col) {
          const auto ab = add(basis[a], basis[b]);
          const double w = a == b ? 1.0 : kSqrt2;
          for (const auto& [m, c] : t.factor.terms())
            trip.push_back({row(add(ab, m)), static_cast<int>(col), w * c});
        }
      }
    }
  }
  const std::size_t rows = rhs.size();
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(rows, n);
  for (const auto& t : trip) A(t.row, t.col) += t.value;
  const Eigen::VectorXd b = Eigen::Map<const Eigen::VectorXd>(rhs.data(), rows);

  Solution sol;
  auto finish = [&](const Eigen::VectorXd& x, Status st, int iters) {
    sol.status = st;
    sol.iterations = iters;
    sol.free.assign(x.data(), x.data() + num_free_);
    sol.grams.clear();
    sol.min_eig = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < blocks_.size(); ++k) {
      sol.grams.push_back(unpack(x, offset[k], blocks_[k].size()));
      sol.min_eig = std::min(sol.min_eig, min_eigenvalue(sol.grams.back()));
    }
    if (blocks_.empty()) sol.min_eig = 0.0;
    sol.residual = rows ? (A * x - b).cwiseAbs().maxCoeff() : 0.0;
    return sol;
  };

  auto project_cone = [&](const Eigen::VectorXd& z) {
    Eigen::VectorXd x = z;
    for (std::size_t k = 0; k < blocks_.size(); ++k) {
      const std::size_t s = blocks_[k].size();
      if (s == 0) continue;
      pack(psd_part(unpack(z, offset[k], s)), x, offset[k]);
    }
    return x;
  };

  if (n == 0) {
    const bool ok = rows == 0 || b.cwiseAbs().maxCoeff() <= opts.tol;
    return finish(Eigen::VectorXd(), ok ? Status::kFeasible : Status::kInfeasible, 0);
  }
  if (rows == 0) return finish(project_cone(Eigen::VectorXd::Zero(n)), Status::kFeasible, 0);

  // Projection onto {A v = b}: v - Vr Vr^T v + x_ls with x_ls in the row space.
  Eigen::BDCSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const double smax = svd.singularValues().size() ? svd.singularValues()(0) : 0.0;
  svd.setThreshold(1e-12 * std::max<double>(rows, n) * (smax > 0 ? 1.0 : 0.0) + 1e-300);
  const Eigen::Index r = svd.rank();
  const Eigen::VectorXd x_ls = svd.solve(b);
  if ((A * x_ls - b).cwiseAbs().maxCoeff() > 1e-9 * std::max(1.0, b.cwiseAbs().maxCoeff()))
    return finish(project_cone(x_ls), Status::kInfeasible, 0);
  const Eigen::MatrixXd Vr = svd.matrixV().leftCols(r);
  auto project_affine = [&](const Eigen::VectorXd& v) -> Eigen::VectorXd {
    return v - Vr * (Vr.transpose() * v) + x_ls;
  };

  // Restricts every Gram to the dominant eigenspace of x and solves the
  // matching exactly there. Boundary solutions (rank-deficient Grams) are
  // reached this way long before the splitting iteration converges.
  auto polish = [&](const Eigen::VectorXd& x) -> std::optional<Eigen::VectorXd> {
    std::vector<Eigen::MatrixXd> faces;
    Eigen::Index m = num_free_;
    for (std::size_t k = 0; k < blocks_.size(); ++k) {
      const std::size_t s = blocks_[k].size();
      std::vector<Eigen::Index> keep;
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
      if (s > 0) es.compute(unpack(x, offset[k], s));
      const double top = s ? std::max(1.0, es.eigenvalues().maxCoeff()) : 1.0;
      for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(s); ++i)
        if (es.eigenvalues()(i) > 1e-6 * top) keep.push_back(i);
      Eigen::MatrixXd V(s, keep.size());
      for (std::size_t i = 0; i < keep.size(); ++i) V.col(i) = es.eigenvectors().col(keep[i]);
      m += svec_size(keep.size());
      faces.push_back(std::move(V));
    }
    // x = T w with w = (free scalars, svec S_k) and Q_k = V_k S_k V_k^T.
    Eigen::MatrixXd T = Eigen::MatrixXd::Zero(n, m);
    Eigen::VectorXd w0(m);
    for (Eigen::Index i = 0; i < num_free_; ++i) {
      T(i, i) = 1.0;
      w0(i) = x(i);
    }
    Eigen::Index col = num_free_;
    for (std::size_t k = 0; k < blocks_.size(); ++k) {
      const auto& V = faces[k];
      const std::size_t r = V.cols();
      const Eigen::MatrixXd S = V.transpose() * unpack(x, offset[k], blocks_[k].size()) * V;
      Eigen::VectorXd wk = Eigen::VectorXd::Zero(svec_size(r));
      pack(S, wk, 0);
      w0.segment(col, wk.size()) = wk;
      for (std::size_t j = 0; j < svec_size(r); ++j) {
        Eigen::VectorXd e = Eigen::VectorXd::Zero(svec_size(r));
        e(j) = 1.0;
        Eigen::VectorXd colv = Eigen::VectorXd::Zero(n);
        pack(V * unpack(e, 0, r) * V.transpose(), colv, offset[k]);
        T.col(col + j) = colv;
      }
      col += svec_size(r);
    }
    const Eigen::MatrixXd AT = A * T;
    const Eigen::VectorXd w =
        w0 + AT.completeOrthogonalDecomposition().solve(b - AT * w0);
    Eigen::VectorXd out = T * w;
    col = num_free_;
    for (std::size_t k = 0; k < blocks_.size(); ++k) {
      const auto& V = faces[k];
      const std::size_t r = V.cols();
      const Eigen::MatrixXd S = psd_part(unpack(w, col, r));
      Eigen::VectorXd tmp = Eigen::VectorXd::Zero(n);
      pack(V * S * V.transpose(), tmp, offset[k]);
      out.segment(offset[k], svec_size(blocks_[k].size())) =
          tmp.segment(offset[k], svec_size(blocks_[k].size()));
      col += svec_size(r);
    }
    if ((A * out - b).cwiseAbs().maxCoeff() <= opts.tol) return out;
    return std::nullopt;
  };

  Eigen::VectorXd z = x_ls;
  // Infeasible problems drive z off linearly with a constant gap; plateaus of
  // feasible runs are shorter than three windows in practice.
  double gap_mark = -1.0;
  int stable = 0;
  for (int it = 1; it <= opts.max_iters; ++it) {
    const Eigen::VectorXd x = project_cone(z);
    const double res = (A * x - b).cwiseAbs().maxCoeff();
    if (res <= opts.tol) return finish(x, Status::kFeasible, it);
    if (it % kPolishEvery == 0 && res <= 1e-3)
      if (auto p = polish(x)) return finish(*p, Status::kFeasible, it);
    const Eigen::VectorXd y = project_affine(2.0 * x - z);
    const Eigen::VectorXd step = y - x;
    z += opts.relaxation * step;
    if (opts.stall_window > 0 && it % opts.stall_window == 0) {
      const double gap = step.norm();
      const bool flat = gap_mark > 0 && gap > 1e3 * opts.tol &&
                        std::abs(gap - gap_mark) <= 1e-6 * gap;
      stable = flat ? stable + 1 : 0;
      if (stable >= 3) return finish(x, Status::kLikelyInfeasible, it);
      gap_mark = gap;
    }
  }
  return finish(project_cone(z), Status::kBudgetExhausted, opts.max_iters);
}

SosResult check_sos(const poly::Polynomial& p, const SolverOptions& opts) {
  SosResult out;
  if (p.is_zero()) {
    out.status = Status::kFeasible;
    return out;
  }
  const int deg = p.degree();
  if (deg % 2 != 0) {
    out.status = Status::kInfeasible;
    return out;
  }
  std::vector<std::size_t> vars;
  for (std::size_t v = 0; v < p.num_vars(); ++v)
    if (p.depends_on(v)) vars.push_back(v);
  std::vector<poly::Monomial> support;
  for (const auto& [m, c] : p.terms()) support.push_back(m);

  Program prog(p.universe());
  const int blk = prog.add_block(
      prune_basis(monomials_upto(p.num_vars(), vars, deg / 2), support));
  prog.add_identity({p, {}}, {{blk, poly::Polynomial::constant(p.universe(), -1.0)}});
  const auto sol = prog.solve(opts);
  out.status = sol.status;
  out.basis = prog.basis(blk);
  out.gram = sol.grams.empty() ? Eigen::MatrixXd() : sol.grams[blk];
  out.residual = sol.residual;
  out.min_eig = sol.min_eig;
  out.iterations = sol.iterations;
  return out;
}

poly::Polynomial gram_polynomial(const poly::Universe& u,
                                 const std::vector<poly::Monomial>& basis,
                                 const Eigen::MatrixXd& q) {
  poly::Polynomial out(u);
  for (std::size_t a = 0; a < basis.size(); ++a)
    for (std::size_t b = 0; b < basis.size(); ++b)
      out += poly::Polynomial::monomial(u, add(basis[a], basis[b]), q(a, b));
  return out;
}

}  // namespace safegame::sos
