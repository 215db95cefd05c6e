// Sparse multivariate polynomials over a fixed, named variable universe,
// with moment-based expectation over independent disturbances.

#pragma once

#include <map>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace safegame::poly {

using Universe = std::shared_ptr<const std::vector<std::string>>;

Universe make_universe(std::vector<std::string> names);

/// Exponent vector, one entry per universe variable.
using Monomial = std::vector<int>;

/// Graded lexicographic order: total degree first, then lexicographic with
/// earlier variables ranking higher.
struct GradedLex {
  bool operator()(const Monomial& a, const Monomial& b) const;
};

class UniverseMismatch : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class Polynomial {
 public:
  using Terms = std::map<Monomial, double, GradedLex>;

  /// Coefficients with magnitude below this are dropped after arithmetic.
  static constexpr double kDropTolerance = 1e-12;

  Polynomial() = default;
  explicit Polynomial(Universe u);
  Polynomial(Universe u, Terms terms);

  static Polynomial constant(Universe u, double c);
  static Polynomial variable(Universe u, std::string_view name);
  static Polynomial monomial(Universe u, Monomial m, double c = 1.0);

  const Universe& universe() const { return universe_; }
  std::size_t num_vars() const { return universe_ ? universe_->size() : 0; }
  const Terms& terms() const { return terms_; }
  bool is_zero() const { return terms_.empty(); }
  int degree() const;
  int degree_in(std::size_t var) const;
  int degree_in(std::string_view var) const;
  /// Coefficient of `m`, zero when absent.
  double coeff(const Monomial& m) const;
  /// Index of `name` in the universe; throws if absent.
  std::size_t index_of(std::string_view name) const;
  /// Whether any term has a positive exponent on `var`.
  bool depends_on(std::size_t var) const { return degree_in(var) > 0; }

  Polynomial operator-() const;
  Polynomial& operator+=(const Polynomial& o);
  Polynomial& operator-=(const Polynomial& o);
  Polynomial& operator*=(double s);
  friend Polynomial operator+(Polynomial a, const Polynomial& b) { return a += b; }
  friend Polynomial operator-(Polynomial a, const Polynomial& b) { return a -= b; }
  friend Polynomial operator*(const Polynomial& a, const Polynomial& b);
  friend Polynomial operator*(Polynomial a, double s) { return a *= s; }
  friend Polynomial operator*(double s, Polynomial a) { return a *= s; }
  Polynomial pow(int k) const;

  /// Values aligned with the universe.
  double eval(std::span<const double> values) const;
  /// Throws std::invalid_argument when a variable the polynomial uses is
  /// missing from the assignment.
  double eval(const std::map<std::string, double>& assignment) const;

  /// Replaces `var` by `q` (same universe).
  Polynomial substitute(std::string_view var, const Polynomial& q) const;
  /// Simultaneous substitution; entries of `images` may be null to keep a
  /// variable. `images` is aligned with the universe.
  Polynomial substitute_all(const std::vector<const Polynomial*>& images) const;

  /// Same polynomial over another universe. Throws if a used variable is
  /// missing from `target`.
  Polynomial rebase(const Universe& target) const;

  /// Structural equality within `tol` on every coefficient.
  bool approx_equal(const Polynomial& o, double tol) const;
  friend bool operator==(const Polynomial& a, const Polynomial& b) {
    return a.approx_equal(b, 0.0);
  }

 private:
  void check_same(const Polynomial& o) const;
  void prune();

  Universe universe_;
  Terms terms_;
};

std::string to_string(const Polynomial& p);

class PolyParseError : public std::runtime_error {
 public:
  PolyParseError(const std::string& msg, std::size_t pos)
      : std::runtime_error(msg + " at position " + std::to_string(pos)),
        position_(pos) {}
  std::size_t position() const { return position_; }

 private:
  std::size_t position_;
};

/// Parses `-0.5*x1*x2 + w1` style text (`+ - * ^`, parentheses, numeric
/// literals, identifiers). Every identifier must be in `u`.
Polynomial parse_polynomial(std::string_view text, const Universe& u);

/// Per-variable raw moments m_k = E[w^k], k = 0..K.
class MomentTable {
 public:
  MomentTable() = default;

  /// Moments of Unif[lo, hi]; the law must be centred (lo = -hi).
  static std::vector<double> uniform(double lo, double hi, int order);
  /// Moments of N(0, sigma^2).
  static std::vector<double> gaussian(double sigma, int order);

  /// Checks m_0 = 1 and m_1 = 0.
  void set(std::string name, std::vector<double> moments);
  bool has(std::string_view name) const;
  const std::vector<double>& moments(std::string_view name) const;

 private:
  std::map<std::string, std::vector<double>, std::less<>> table_;
};

class InsufficientMoments : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Replaces each disturbance power w^k by E[w^k], assuming the listed
/// disturbances are mutually independent and independent of every other
/// variable. Disturbances are the universe variables that have an entry in
/// `m`. The result keeps the universe but has no disturbance dependence.
Polynomial expect_w(const Polynomial& p, const MomentTable& m);

/// Flat term arrays for fast repeated evaluation.
class CompiledPolynomial {
 public:
  CompiledPolynomial() = default;
  explicit CompiledPolynomial(const Polynomial& p);

  double eval(const double* values) const;
  std::size_t num_vars() const { return nvars_; }

 private:
  std::size_t nvars_ = 0;
  std::vector<double> coeffs_;
  std::vector<int> exps_;  // terms x nvars
  int max_exp_ = 0;
};

}  // namespace safegame::poly
