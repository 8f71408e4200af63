#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <string>
#include <vector>

#include "gtd/expr.hpp"
#include "gtd/rng.hpp"
#include "gtd/system.hpp"
#include "oracles.hpp"

using namespace gtd;

namespace {

Expression reparse(const Expression& e) {
  return Expression::parse(e.str(), e.variables(), e.parameters());
}

}  // namespace

TEST_CASE("parse: fundamental-equation examples") {
  Expression ideal =
      Expression::parse("(3/2)*kappa*ln(U) + kappa*ln(V)", {"U", "V"}, {"kappa"});
  REQUIRE(ideal.variables() == std::vector<std::string>{"U", "V"});
  REQUIRE(ideal.parameters() == std::vector<std::string>{"kappa"});

  Expression identity = Expression::parse("U", {"U"});
  double u[] = {2.5};
  REQUIRE(identity.evaluate_value(u, {}) == 2.5);

  Expression vdw = Expression::parse("(3/2)*kappa*ln(U + a/V) + kappa*ln(V - b)", {"U", "V"},
                                     {"kappa", "a", "b"});
  REQUIRE(vdw.parameters() == std::vector<std::string>{"kappa", "a", "b"});
}

TEST_CASE("parse: canonical printer round-trips") {
  std::vector<std::string> sources = {
      "(3/2)*kappa*ln(U) + kappa*ln(V)",
      "(3/2)*kappa*ln(U + a/V) + kappa*ln(V - b)",
      "-U^2",
      "(-U)^2",
      "2^-3",
      "U - (V - kappa)",
      "U/(V/kappa)",
      "exp(U*ln(V))",
      "U^(V^2)",
      "-(U + V)",
      "1e-3*U + 2.5E+2",
  };
  for (const std::string& src : sources) {
    INFO("source: " << src);
    Expression e = Expression::parse(src, {"U", "V"}, {"kappa", "a", "b"});
    Expression r = reparse(e);
    REQUIRE(e == r);
    REQUIRE(e.str() == r.str());
  }
}

TEST_CASE("parse: unary minus binds tighter than power") {
  // Grammar: factor := atom ('^' atom)?, atom := ... | '-' atom, so -U^2
  // parses as (-U)^2.
  Expression a = Expression::parse("-U^2", {"U"});
  Expression b = Expression::parse("(-U)^2", {"U"});
  REQUIRE(a == b);
  double u[] = {3.0};
  REQUIRE(a.evaluate_value(u, {}) == 9.0);
}

TEST_CASE("parse: errors carry position and identifier checks") {
  try {
    Expression::parse("U +\n* V", {"U", "V"});
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    REQUIRE(e.line == 2);
    REQUIRE(e.col == 1);
  }
  REQUIRE_THROWS_AS(Expression::parse("U + W", {"U", "V"}), ParseError);
  REQUIRE_THROWS_AS(Expression::parse("U + ", {"U"}), ParseError);
  REQUIRE_THROWS_AS(Expression::parse("ln U", {"U"}), ParseError);
  REQUIRE_THROWS_AS(Expression::parse("(U", {"U"}), ParseError);
}

TEST_CASE("evaluate: ideal-gas entropy derivatives at (1,1)") {
  Expression S = Expression::parse("(3/2)*kappa*ln(U) + kappa*ln(V)", {"U", "V"}, {"kappa"});
  double pt[] = {1.0, 1.0};
  double params[] = {1.0};
  DerivativeBundle b = S.evaluate(pt, params, 2);
  REQUIRE(b.value() == 0.0);
  REQUIRE(b.partial({1, 0}) == 1.5);
  REQUIRE(b.partial({0, 1}) == 1.0);
  REQUIRE(b.partial({2, 0}) == -1.5);
  REQUIRE(b.partial({0, 2}) == -1.0);
  REQUIRE(b.partial({1, 1}) == 0.0);
}

TEST_CASE("evaluate: constants have vanishing derivatives") {
  Expression c = Expression::parse("2.5", {"U", "V"});
  double pt[] = {0.3, -4.0};
  DerivativeBundle b = c.evaluate(pt, {}, 4);
  REQUIRE(b.value() == 2.5);
  for (size_t i = 1; i < b.partials.size(); ++i) REQUIRE(b.partials[i] == 0.0);
}

TEST_CASE("evaluate: van der Waals entropy at (1,1)") {
  Expression S = Expression::parse("(3/2)*kappa*ln(U + a/V) + kappa*ln(V - b)", {"U", "V"},
                                   {"kappa", "a", "b"});
  double pt[] = {1.0, 1.0};
  double params[] = {1.0, 1.0, 0.1};
  DerivativeBundle b = S.evaluate(pt, params, 1);
  REQUIRE(b.value() == Catch::Approx(1.5 * std::log(2.0) + std::log(0.9)).epsilon(1e-15));
  REQUIRE(b.partial({1, 0}) == Catch::Approx(0.75).epsilon(1e-15));
}

TEST_CASE("evaluate: domain violations name the offending subterm") {
  Expression S = Expression::parse("(3/2)*kappa*ln(U) + kappa*ln(V)", {"U", "V"}, {"kappa"});
  double bad[] = {-1.0, 1.0};
  double params[] = {1.0};
  try {
    S.evaluate(bad, params, 1);
    FAIL("expected EvalError");
  } catch (const EvalError& e) {
    REQUIRE(std::string(e.what()).find("ln(U)") != std::string::npos);
  }

  Expression q = Expression::parse("1/(U - 1)", {"U"});
  double one[] = {1.0};
  REQUIRE_THROWS_AS(q.evaluate(one, {}, 1), EvalError);

  Expression p = Expression::parse("U^0.5", {"U"});
  double neg[] = {-2.0};
  REQUIRE_THROWS_AS(p.evaluate(neg, {}, 1), EvalError);
  // Integer powers keep sign domains: (-2)^3 is fine.
  Expression cube = Expression::parse("U^3", {"U"});
  REQUIRE(cube.evaluate_value(neg, {}) == -8.0);
}

TEST_CASE("evaluate: polynomial derivatives beyond the degree vanish exactly") {
  Expression p = Expression::parse("(U + 2*V)^3", {"U", "V"});
  double pt[] = {0.7, -1.3};
  DerivativeBundle b = p.evaluate(pt, {}, 4);
  // order-4 partials of a cubic are exactly zero
  const JetSpace& space = JetSpace::get(2, 4);
  for (int s = 0; s < space.size(); ++s)
    if (space.degree(s) == 4) REQUIRE(b.partials[s] == 0.0);
  // the cubic coefficient itself is exact: d^3/dV^3 = 6 * 2^3 = 48
  REQUIRE(b.partial({0, 3}) == 48.0);
  REQUIRE(b.partial({2, 1}) == 12.0);  // 3! * (coefficient of U^2 V) = 6*2
}

TEST_CASE("evaluate: agrees with the Richardson finite-difference oracle") {
  SplitMix64 rng(42);
  for (const ThermoSystem& sys : {ThermoSystem::ideal(), ThermoSystem::vdw()}) {
    const Expression& f = sys.fundamental();
    auto value = [&](std::span<const double> p) {
      return f.evaluate_value(p, sys.parameter_values());
    };
    for (int trial = 0; trial < 100; ++trial) {
      std::vector<double> pt{rng.uniform(0.5, 5.0), rng.uniform(0.5, 5.0)};
      DerivativeBundle b = f.evaluate(pt, sys.parameter_values(), 2);
      for (int i = 0; i < 2; ++i) {
        std::vector<int> alpha{0, 0};
        alpha[i] = 1;
        double fd = oracle::fd_d1(value, pt, i);
        INFO(sys.name() << " point (" << pt[0] << ", " << pt[1] << ") d1 var " << i);
        REQUIRE(oracle::rel_dev(b.partial(alpha), fd) < 1e-6);
        for (int j = i; j < 2; ++j) {
          std::vector<int> beta{0, 0};
          ++beta[i];
          ++beta[j];
          double fd2 = oracle::fd_d2(value, pt, i, j);
          REQUIRE(oracle::rel_dev(b.partial(beta), fd2) < 1e-6);
        }
      }
    }
  }
}

TEST_CASE("evaluate: orders three and four agree with differenced lower orders") {
  // Semi-nested check: finite differences of the exact order-2 partials must
  // reproduce the order-3 and order-4 partials.
  ThermoSystem vdw = ThermoSystem::vdw();
  const Expression& f = vdw.fundamental();
  SplitMix64 rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> pt{rng.uniform(0.8, 3.0), rng.uniform(0.8, 3.0)};
    DerivativeBundle b4 = f.evaluate(pt, vdw.parameter_values(), 4);
    auto partial2 = [&](std::span<const double> p, int i, int j) {
      std::vector<int> alpha{0, 0};
      ++alpha[i];
      ++alpha[j];
      return f.evaluate(p, vdw.parameter_values(), 2).partial(alpha);
    };
    for (int i = 0; i < 2; ++i)
      for (int j = i; j < 2; ++j) {
        for (int k = 0; k < 2; ++k) {
          std::vector<int> alpha{0, 0};
          ++alpha[i];
          ++alpha[j];
          ++alpha[k];
          auto f2 = [&](std::span<const double> p) { return partial2(p, i, j); };
          REQUIRE(oracle::rel_dev(b4.partial(alpha), oracle::fd_d1(f2, pt, k)) < 1e-6);
          for (int l = k; l < 2; ++l) {
            ++alpha[l];
            REQUIRE(oracle::rel_dev(b4.partial(alpha), oracle::fd_d2(f2, pt, k, l)) < 1e-5);
            --alpha[l];
          }
        }
      }
  }
}

TEST_CASE("evaluate: argument checks") {
  Expression e = Expression::parse("U + V", {"U", "V"});
  double pt[] = {1.0, 2.0};
  REQUIRE_THROWS_AS(e.evaluate(pt, {}, 5), std::invalid_argument);  // order capped at 4
  double short_pt[] = {1.0};
  REQUIRE_THROWS_AS(e.evaluate(short_pt, {}, 1), std::invalid_argument);
  DerivativeBundle b = e.evaluate(pt, {}, 2);
  REQUIRE_THROWS_AS(b.partial({2, 1}), std::invalid_argument);  // beyond bundle order
}

TEST_CASE("evaluate: general exponent goes through exp(g ln f)") {
  Expression e = Expression::parse("U^V", {"U", "V"});
  double pt[] = {2.0, 3.0};
  REQUIRE(e.evaluate_value(pt, {}) == Catch::Approx(8.0).epsilon(1e-14));
  DerivativeBundle b = e.evaluate(pt, {}, 1);
  REQUIRE(b.partial({1, 0}) == Catch::Approx(12.0).epsilon(1e-12));                 // V U^(V-1)
  REQUIRE(b.partial({0, 1}) == Catch::Approx(8.0 * std::log(2.0)).epsilon(1e-12));  // U^V ln U
  double bad[] = {-2.0, 3.0};
  REQUIRE_THROWS_AS(e.evaluate(bad, {}, 1), EvalError);
}
