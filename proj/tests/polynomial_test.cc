#include "safegame/polynomial.h"

#include <cmath>
#include <random>

#include <gtest/gtest.h>

namespace safegame::poly {
namespace {

const Universe kU = make_universe({"x1", "x2", "w1", "w2"});

Polynomial P(std::string_view s) { return parse_polynomial(s, kU); }

Polynomial random_poly(std::mt19937_64& rng, int terms, int max_deg) {
  std::uniform_int_distribution<int> e(0, max_deg);
  std::uniform_real_distribution<double> c(-2.0, 2.0);
  Polynomial::Terms t;
  for (int i = 0; i < terms; ++i) t[{e(rng), e(rng), e(rng), e(rng)}] = c(rng);
  return Polynomial(kU, t);
}

TEST(PolynomialTest, ParseAndPrint) {
  const Polynomial p = P("-0.5*x1*x2 + w1");
  EXPECT_EQ(p.coeff({1, 1, 0, 0}), -0.5);
  EXPECT_EQ(p.coeff({0, 0, 1, 0}), 1.0);
  EXPECT_EQ(p.terms().size(), 2u);
  EXPECT_EQ(P(to_string(p)), p);
  EXPECT_EQ(P("(x1 + 1)^2"), P("x1^2 + 2*x1 + 1"));
  EXPECT_EQ(P("x1 - x1"), Polynomial(kU));
  EXPECT_EQ(to_string(Polynomial(kU)), "0");
  EXPECT_EQ(P("--x1"), P("x1"));
}

TEST(PolynomialTest, ParseErrors) {
  try {
    P("x1 + y9");
    FAIL() << "expected PolyParseError";
  } catch (const PolyParseError& e) {
    EXPECT_EQ(e.position(), 5u);
  }
  EXPECT_THROW(P("x1 +"), PolyParseError);
  EXPECT_THROW(P("x1^1.5"), PolyParseError);
  EXPECT_THROW(P("(x1"), PolyParseError);
  EXPECT_THROW(P("x1 x2"), PolyParseError);
}

TEST(PolynomialTest, PrintRoundTripRandom) {
  std::mt19937_64 rng(1);
  for (int i = 0; i < 200; ++i) {
    const Polynomial p = random_poly(rng, 6, 3);
    EXPECT_EQ(P(to_string(p)), p) << to_string(p);
  }
}

TEST(PolynomialTest, SubstitutionOfDynamics) {
  // B = x1^2 under x1 <- -0.5 x1 x2 + w1.
  const Polynomial b = P("x1^2");
  const Polynomial s = b.substitute("x1", P("-0.5*x1*x2 + w1"));
  EXPECT_TRUE(s.approx_equal(P("0.25*x1^2*x2^2 - x1*x2*w1 + w1^2"), 1e-15));
}

TEST(PolynomialTest, SimultaneousSubstitutionUsesOldValues) {
  const Polynomial p = P("x1*x2");
  const Polynomial a = P("x2"), b = P("x1 + 1");
  const Polynomial r = p.substitute_all({&a, &b, nullptr, nullptr});
  EXPECT_EQ(r, P("x2*x1 + x2"));
}

TEST(PolynomialTest, ExampleBarrierValue) {
  const Polynomial b = P(
      "0.1915*x1^2 + 0.1868*x1*x2 - 0.144*x1 + 0.1201*x2^2 + 0.1239*x2 + 0.16");
  // 0.1915 * 0.9487^2 + 0.144 * 0.9487 + 0.16, by hand.
  EXPECT_NEAR(b.eval(std::vector<double>{-0.9487, 0.0, 0.0, 0.0}), 0.46896888,
              1e-7);
  EXPECT_NEAR(b.eval({{"x1", -0.9487}, {"x2", 0.0}}), 0.46896888, 1e-7);
  EXPECT_THROW(b.eval({{"x1", 1.0}}), std::invalid_argument);
}

TEST(PolynomialTest, UniverseMismatch) {
  const Universe other = make_universe({"y"});
  EXPECT_THROW(P("x1") + Polynomial::variable(other, "y"), UniverseMismatch);
  // Equal names in a distinct object are compatible.
  const Universe same = make_universe({"x1", "x2", "w1", "w2"});
  EXPECT_EQ(P("x1") + parse_polynomial("x2", same), P("x1 + x2"));
  EXPECT_THROW(make_universe({"x", "x"}), std::invalid_argument);
  EXPECT_EQ(P("x1 + 2").rebase(make_universe({"z", "x1"})).coeff({0, 1}), 1.0);
  EXPECT_THROW(P("x2").rebase(make_universe({"x1"})), UniverseMismatch);
}

TEST(PolynomialTest, RingAxiomsOnRandomPolynomials) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> pt(-1.5, 1.5);
  for (int i = 0; i < 100; ++i) {
    const auto a = random_poly(rng, 4, 2), b = random_poly(rng, 4, 2),
               c = random_poly(rng, 4, 2);
    EXPECT_TRUE((a * (b + c)).approx_equal(a * b + a * c, 1e-10));
    EXPECT_TRUE((a * b).approx_equal(b * a, 1e-12));
    EXPECT_TRUE(((a * b) * c).approx_equal(a * (b * c), 1e-10));
    EXPECT_TRUE((a - a).is_zero());
    const std::vector<double> x{pt(rng), pt(rng), pt(rng), pt(rng)};
    EXPECT_NEAR((a * b).eval(x), a.eval(x) * b.eval(x), 1e-9);
    EXPECT_NEAR(CompiledPolynomial(a * b).eval(x.data()), (a * b).eval(x),
                1e-9);
  }
}

TEST(PolynomialTest, Degrees) {
  const Polynomial p = P("x1^3*w1 + x2 + 4");
  EXPECT_EQ(p.degree(), 4);
  EXPECT_EQ(p.degree_in("x1"), 3);
  EXPECT_EQ(p.degree_in("w2"), 0);
  EXPECT_EQ(P("x1 + 1").pow(3), P("x1^3 + 3*x1^2 + 3*x1 + 1"));
}

TEST(MomentTest, Laws) {
  const auto u = MomentTable::uniform(-1, 1, 4);
  EXPECT_DOUBLE_EQ(u[2], 1.0 / 3.0);
  EXPECT_DOUBLE_EQ(u[3], 0.0);
  EXPECT_DOUBLE_EQ(u[4], 1.0 / 5.0);
  const auto g = MomentTable::gaussian(2.0, 4);
  EXPECT_DOUBLE_EQ(g[2], 4.0);
  EXPECT_DOUBLE_EQ(g[4], 48.0);
  EXPECT_THROW(MomentTable::uniform(0, 1, 2), std::invalid_argument);
  MomentTable m;
  EXPECT_THROW(m.set("w1", {1.0, 0.5}), std::invalid_argument);
  EXPECT_THROW(m.set("w1", {0.9}), std::invalid_argument);
}

TEST(ExpectTest, UniformExpectationOfSubstitutedSquare) {
  MomentTable m;
  m.set("w1", MomentTable::uniform(-1, 1, 4));
  m.set("w2", MomentTable::uniform(-1, 1, 4));
  const Polynomial s = P("x1^2").substitute("x1", P("-0.5*x1*x2 + w1"));
  const Polynomial e = expect_w(s, m);
  EXPECT_NEAR(e.coeff({0, 0, 0, 0}), 1.0 / 3.0, 1e-15);
  EXPECT_NEAR(e.coeff({2, 2, 0, 0}), 0.25, 1e-15);
  EXPECT_EQ(e.terms().size(), 2u);
  EXPECT_EQ(e.degree_in("w1"), 0);
  EXPECT_THROW(expect_w(P("w1^5"), m), InsufficientMoments);
}

TEST(ExpectTest, MatchesMonteCarlo) {
  MomentTable m;
  m.set("w1", MomentTable::uniform(-1, 1, 6));
  m.set("w2", MomentTable::uniform(-1, 1, 6));
  const Polynomial p = P("(x1 + w1)^2 * (x2 - w2)^2 + w1^4*w2");
  const std::vector<double> x{0.3, -0.7};
  const Polynomial e = expect_w(p, m);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> w(-1.0, 1.0);
  const int n = 400000;
  double acc = 0.0;
  for (int i = 0; i < n; ++i) acc += p.eval(std::vector<double>{x[0], x[1], w(rng), w(rng)});
  EXPECT_NEAR(acc / n, e.eval(std::vector<double>{x[0], x[1], 0, 0}), 5e-3);
}

TEST(ExpectTest, SquareOfUniformIsOneThird) {
  MomentTable m;
  m.set("w1", MomentTable::uniform(-1, 1, 2));
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> w(-1.0, 1.0);
  double acc = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double v = w(rng);
    acc += v * v;
  }
  EXPECT_NEAR(acc / n, expect_w(P("w1^2"), m).coeff({0, 0, 0, 0}), 3e-3);
}

}  // namespace
}  // namespace safegame::poly
