#include "safegame/polynomial.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>

namespace safegame::poly {

Universe make_universe(std::vector<std::string> names) {
  for (std::size_t i = 0; i < names.size(); ++i)
    for (std::size_t j = i + 1; j < names.size(); ++j)
      if (names[i] == names[j])
        throw std::invalid_argument("duplicate variable '" + names[i] + "'");
  return std::make_shared<const std::vector<std::string>>(std::move(names));
}

bool GradedLex::operator()(const Monomial& a, const Monomial& b) const {
  const int da = std::accumulate(a.begin(), a.end(), 0);
  const int db = std::accumulate(b.begin(), b.end(), 0);
  if (da != db) return da > db;
  return a > b;
}

Polynomial::Polynomial(Universe u) : universe_(std::move(u)) {}

Polynomial::Polynomial(Universe u, Terms terms)
    : universe_(std::move(u)), terms_(std::move(terms)) {
  for (const auto& [m, c] : terms_) {
    if (m.size() != num_vars())
      throw std::invalid_argument("monomial arity does not match universe");
    for (int e : m)
      if (e < 0) throw std::invalid_argument("negative exponent");
  }
  prune();
}

Polynomial Polynomial::constant(Universe u, double c) {
  const std::size_t n = u->size();
  Terms t;
  t[Monomial(n, 0)] = c;
  return Polynomial(std::move(u), std::move(t));
}

Polynomial Polynomial::variable(Universe u, std::string_view name) {
  Polynomial p(u);
  Monomial m(u->size(), 0);
  m[p.index_of(name)] = 1;
  p.terms_[m] = 1.0;
  return p;
}

Polynomial Polynomial::monomial(Universe u, Monomial m, double c) {
  Terms t;
  t[std::move(m)] = c;
  return Polynomial(std::move(u), std::move(t));
}

std::size_t Polynomial::index_of(std::string_view name) const {
  if (!universe_) throw std::invalid_argument("polynomial has no universe");
  for (std::size_t i = 0; i < universe_->size(); ++i)
    if ((*universe_)[i] == name) return i;
  throw std::invalid_argument("variable '" + std::string(name) +
                              "' not in universe");
}

int Polynomial::degree() const {
  int d = 0;
  for (const auto& [m, c] : terms_)
    d = std::max(d, std::accumulate(m.begin(), m.end(), 0));
  return d;
}

int Polynomial::degree_in(std::size_t var) const {
  int d = 0;
  for (const auto& [m, c] : terms_) d = std::max(d, m.at(var));
  return d;
}

int Polynomial::degree_in(std::string_view var) const {
  return degree_in(index_of(var));
}

double Polynomial::coeff(const Monomial& m) const {
  auto it = terms_.find(m);
  return it == terms_.end() ? 0.0 : it->second;
}

void Polynomial::check_same(const Polynomial& o) const {
  if (universe_ == o.universe_) return;
  if (!universe_ || !o.universe_ || *universe_ != *o.universe_)
    throw UniverseMismatch("polynomials over different variable universes");
}

void Polynomial::prune() {
  std::erase_if(terms_, [](const auto& kv) {
    return std::abs(kv.second) < kDropTolerance;
  });
}

Polynomial Polynomial::operator-() const {
  Polynomial r = *this;
  for (auto& [m, c] : r.terms_) c = -c;
  return r;
}

Polynomial& Polynomial::operator+=(const Polynomial& o) {
  if (!universe_) universe_ = o.universe_;
  check_same(o);
  for (const auto& [m, c] : o.terms_) terms_[m] += c;
  prune();
  return *this;
}

Polynomial& Polynomial::operator-=(const Polynomial& o) {
  if (!universe_) universe_ = o.universe_;
  check_same(o);
  for (const auto& [m, c] : o.terms_) terms_[m] -= c;
  prune();
  return *this;
}

Polynomial& Polynomial::operator*=(double s) {
  for (auto& [m, c] : terms_) c *= s;
  prune();
  return *this;
}

Polynomial operator*(const Polynomial& a, const Polynomial& b) {
  a.check_same(b);
  Polynomial r(a.universe_);
  const std::size_t n = a.num_vars();
  Monomial prod(n);
  for (const auto& [ma, ca] : a.terms_) {
    for (const auto& [mb, cb] : b.terms_) {
      for (std::size_t i = 0; i < n; ++i) prod[i] = ma[i] + mb[i];
      r.terms_[prod] += ca * cb;
    }
  }
  r.prune();
  return r;
}

Polynomial Polynomial::pow(int k) const {
  if (k < 0) throw std::invalid_argument("negative power");
  Polynomial result = constant(universe_, 1.0);
  Polynomial base = *this;
  while (k > 0) {
    if (k & 1) result = result * base;
    k >>= 1;
    if (k > 0) base = base * base;
  }
  return result;
}

namespace {

double ipow(double x, int e) {
  double r = 1.0;
  while (e > 0) {
    if (e & 1) r *= x;
    x *= x;
    e >>= 1;
  }
  return r;
}

// Neumaier compensated summation.
struct CompensatedSum {
  double sum = 0.0;
  double comp = 0.0;
  void add(double v) {
    const double t = sum + v;
    if (std::abs(sum) >= std::abs(v))
      comp += (sum - t) + v;
    else
      comp += (v - t) + sum;
    sum = t;
  }
  double value() const { return sum + comp; }
};

}  // namespace

double Polynomial::eval(std::span<const double> values) const {
  if (values.size() != num_vars())
    throw std::invalid_argument("eval: value count does not match universe");
  CompensatedSum acc;
  for (const auto& [m, c] : terms_) {
    double t = c;
    for (std::size_t i = 0; i < m.size(); ++i)
      if (m[i] != 0) t *= ipow(values[i], m[i]);
    acc.add(t);
  }
  return acc.value();
}

double Polynomial::eval(const std::map<std::string, double>& assignment) const {
  std::vector<double> values(num_vars(), 0.0);
  for (std::size_t i = 0; i < num_vars(); ++i) {
    auto it = assignment.find((*universe_)[i]);
    if (it != assignment.end()) {
      values[i] = it->second;
    } else if (depends_on(i)) {
      throw std::invalid_argument("eval: missing value for '" +
                                  (*universe_)[i] + "'");
    }
  }
  return eval(values);
}

Polynomial Polynomial::substitute(std::string_view var,
                                  const Polynomial& q) const {
  check_same(q);
  std::vector<const Polynomial*> images(num_vars(), nullptr);
  images[index_of(var)] = &q;
  return substitute_all(images);
}

Polynomial Polynomial::substitute_all(
    const std::vector<const Polynomial*>& images) const {
  if (images.size() != num_vars())
    throw std::invalid_argument("substitute_all: image count mismatch");
  for (const auto* img : images)
    if (img != nullptr) check_same(*img);
  // Cache powers of each substituted image.
  std::vector<std::vector<Polynomial>> powers(num_vars());
  auto power_of = [&](std::size_t v, int e) -> const Polynomial& {
    auto& cache = powers[v];
    if (cache.empty()) cache.push_back(constant(universe_, 1.0));
    while (static_cast<int>(cache.size()) <= e)
      cache.push_back(cache.back() * *images[v]);
    return cache[e];
  };
  Polynomial out(universe_);
  for (const auto& [m, c] : terms_) {
    Monomial kept = m;
    Polynomial term = constant(universe_, c);
    for (std::size_t v = 0; v < m.size(); ++v) {
      if (images[v] != nullptr && m[v] > 0) {
        kept[v] = 0;
        term = term * power_of(v, m[v]);
      }
    }
    out += term * monomial(universe_, kept, 1.0);
  }
  return out;
}

Polynomial Polynomial::rebase(const Universe& target) const {
  std::vector<int> where(num_vars(), -1);
  for (std::size_t i = 0; i < num_vars(); ++i) {
    for (std::size_t j = 0; j < target->size(); ++j)
      if ((*target)[j] == (*universe_)[i]) where[i] = static_cast<int>(j);
    if (where[i] < 0 && depends_on(i))
      throw UniverseMismatch("rebase: variable '" + (*universe_)[i] +
                             "' missing from target universe");
  }
  Polynomial r(target);
  for (const auto& [m, c] : terms_) {
    Monomial t(target->size(), 0);
    for (std::size_t i = 0; i < m.size(); ++i)
      if (m[i] > 0) t[where[i]] = m[i];
    r.terms_[t] += c;
  }
  r.prune();
  return r;
}

bool Polynomial::approx_equal(const Polynomial& o, double tol) const {
  check_same(o);
  auto diff = *this;
  for (const auto& [m, c] : o.terms_) diff.terms_[m] -= c;
  for (const auto& [m, c] : diff.terms_)
    if (std::abs(c) > tol) return false;
  return true;
}

namespace {

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

}  // namespace

std::string to_string(const Polynomial& p) {
  if (p.is_zero()) return "0";
  std::string out;
  bool first = true;
  for (const auto& [m, c] : p.terms()) {
    const bool constant_term =
        std::all_of(m.begin(), m.end(), [](int e) { return e == 0; });
    double mag = c;
    if (first) {
      if (c < 0) {
        out += "-";
        mag = -c;
      }
    } else {
      out += c < 0 ? " - " : " + ";
      mag = std::abs(c);
    }
    first = false;
    std::string factors;
    for (std::size_t i = 0; i < m.size(); ++i) {
      if (m[i] == 0) continue;
      if (!factors.empty()) factors += "*";
      factors += (*p.universe())[i];
      if (m[i] > 1) factors += "^" + std::to_string(m[i]);
    }
    if (constant_term) {
      out += format_double(mag);
    } else if (mag == 1.0) {
      out += factors;
    } else {
      out += format_double(mag) + "*" + factors;
    }
  }
  return out;
}

std::vector<double> MomentTable::uniform(double lo, double hi, int order) {
  if (!(hi > lo)) throw std::invalid_argument("uniform law needs lo < hi");
  if (std::abs(lo + hi) > 1e-12 * std::max(1.0, hi))
    throw std::invalid_argument("uniform disturbance must have zero mean");
  std::vector<double> m(order + 1);
  for (int k = 0; k <= order; ++k)
    m[k] = (std::pow(hi, k + 1) - std::pow(lo, k + 1)) / ((k + 1) * (hi - lo));
  m[0] = 1.0;
  if (order >= 1) m[1] = 0.0;
  return m;
}

std::vector<double> MomentTable::gaussian(double sigma, int order) {
  if (!(sigma >= 0)) throw std::invalid_argument("gaussian law needs sigma >= 0");
  std::vector<double> m(order + 1, 0.0);
  m[0] = 1.0;
  // m_k = (k-1) sigma^2 m_{k-2}
  for (int k = 2; k <= order; k += 2) m[k] = (k - 1) * sigma * sigma * m[k - 2];
  return m;
}

void MomentTable::set(std::string name, std::vector<double> moments) {
  if (moments.empty() || std::abs(moments[0] - 1.0) > 1e-12)
    throw std::invalid_argument("moment table for '" + name +
                                "' must start with m0 = 1");
  if (moments.size() > 1 && std::abs(moments[1]) > 1e-12)
    throw std::invalid_argument("disturbance '" + name + "' must have zero mean");
  table_[std::move(name)] = std::move(moments);
}

bool MomentTable::has(std::string_view name) const {
  return table_.find(name) != table_.end();
}

const std::vector<double>& MomentTable::moments(std::string_view name) const {
  auto it = table_.find(name);
  if (it == table_.end())
    throw std::invalid_argument("no moments for '" + std::string(name) + "'");
  return it->second;
}

Polynomial expect_w(const Polynomial& p, const MomentTable& m) {
  const auto& names = *p.universe();
  std::vector<const std::vector<double>*> moments(names.size(), nullptr);
  for (std::size_t i = 0; i < names.size(); ++i)
    if (m.has(names[i])) moments[i] = &m.moments(names[i]);
  Polynomial::Terms out;
  for (const auto& [mono, c] : p.terms()) {
    double factor = c;
    Monomial kept = mono;
    for (std::size_t i = 0; i < mono.size(); ++i) {
      if (moments[i] == nullptr || mono[i] == 0) continue;
      const auto& mk = *moments[i];
      if (mono[i] >= static_cast<int>(mk.size()))
        throw InsufficientMoments("expect_w: need moment " +
                                  std::to_string(mono[i]) + " of '" +
                                  names[i] + "'");
      factor *= mk[mono[i]];
      kept[i] = 0;
    }
    out[kept] += factor;
  }
  return Polynomial(p.universe(), std::move(out));
}

CompiledPolynomial::CompiledPolynomial(const Polynomial& p)
    : nvars_(p.num_vars()) {
  for (const auto& [m, c] : p.terms()) {
    coeffs_.push_back(c);
    exps_.insert(exps_.end(), m.begin(), m.end());
    for (int e : m) max_exp_ = std::max(max_exp_, e);
  }
}

double CompiledPolynomial::eval(const double* values) const {
  double acc = 0.0;
  const int* e = exps_.data();
  for (std::size_t t = 0; t < coeffs_.size(); ++t) {
    double v = coeffs_[t];
    for (std::size_t i = 0; i < nvars_; ++i, ++e) {
      switch (*e) {
        case 0: break;
        case 1: v *= values[i]; break;
        case 2: v *= values[i] * values[i]; break;
        default: v *= ipow(values[i], *e);
      }
    }
    acc += v;
  }
  return acc;
}

}  // namespace safegame::poly
