#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <fstream>

#include "gtd/equilibrium.hpp"
#include "gtd/rng.hpp"
#include "gtd/system.hpp"

using namespace gtd;

namespace {

// Independent closed-form state equations, hand-derived from the fundamental
// equations by symbolic substitution.
double ideal_T(double U, double k) { return 2.0 * U / (3.0 * k); }
double ideal_P(double U, double V, double /*k*/) { return 2.0 * U / (3.0 * V); }

double vdw_T(double U, double V, double k, double a) { return 2.0 * (U + a / V) / (3.0 * k); }
double vdw_P(double U, double V, double /*k*/, double a, double b) {
  return 2.0 * (U + a / V) / (3.0 * (V - b)) - a / (V * V);
}

}  // namespace

TEST_CASE("equations of state: ideal gas reference points") {
  ThermoSystem ideal = ThermoSystem::ideal();
  StateVariables sv = equations_of_state(ideal, std::array{1.5, 1.0});
  REQUIRE(sv.T == Catch::Approx(1.0).epsilon(1e-14));
  REQUIRE(sv.P == Catch::Approx(1.0).epsilon(1e-14));
  sv = equations_of_state(ideal, std::array{3.0, 2.0});
  REQUIRE(sv.T == Catch::Approx(2.0).epsilon(1e-14));
  REQUIRE(sv.P == Catch::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("equations of state: ideal-gas laws hold on a grid") {
  ThermoSystem ideal = ThermoSystem::ideal();
  double kappa = ideal.parameter("kappa");
  for (int i = 0; i < 20; ++i)
    for (int j = 0; j < 20; ++j) {
      double U = 0.1 + (10.0 - 0.1) * i / 19.0;
      double V = 0.1 + (10.0 - 0.1) * j / 19.0;
      StateVariables sv = equations_of_state(ideal, std::array{U, V});
      REQUIRE(std::abs(sv.P * V - kappa * sv.T) <= 1e-12 * std::abs(kappa * sv.T));
      REQUIRE(std::abs(U - 1.5 * kappa * sv.T) <= 1e-12 * std::abs(U));
    }
}

TEST_CASE("equations of state: vdW with a=b=0 degenerates to the ideal gas") {
  ThermoSystem ideal = ThermoSystem::ideal();
  ThermoSystem vdw0 = ThermoSystem::vdw(1.0, 0.0, 0.0);
  SplitMix64 rng(3);
  for (int i = 0; i < 25; ++i) {
    std::vector<double> E{rng.uniform(0.2, 8.0), rng.uniform(0.2, 8.0)};
    StateVariables a = equations_of_state(ideal, E);
    StateVariables b = equations_of_state(vdw0, E);
    REQUIRE(a.T == Catch::Approx(b.T).epsilon(1e-14));
    REQUIRE(a.P == Catch::Approx(b.P).epsilon(1e-14));
    REQUIRE(a.S == Catch::Approx(b.S).margin(1e-14));
  }
}

TEST_CASE("equations of state: vdW converges to the ideal gas as a,b -> 0") {
  ThermoSystem ideal = ThermoSystem::ideal();
  ThermoSystem vdw = ThermoSystem::vdw(1.0, 1e-8, 1e-8);
  SplitMix64 rng(11);
  for (int i = 0; i < 25; ++i) {
    std::vector<double> E{rng.uniform(0.5, 5.0), rng.uniform(0.5, 5.0)};
    StateVariables a = equations_of_state(ideal, E);
    StateVariables b = equations_of_state(vdw, E);
    REQUIRE(std::abs(a.T - b.T) / a.T < 1e-6);
    REQUIRE(std::abs(a.P - b.P) / std::abs(a.P) < 1e-6);
  }
}

TEST_CASE("equations of state: closed-form oracle for both systems") {
  ThermoSystem ideal = ThermoSystem::ideal();
  ThermoSystem vdw = ThermoSystem::vdw();
  SplitMix64 rng(17);
  for (int i = 0; i < 40; ++i) {
    double U = rng.uniform(0.3, 6.0), V = rng.uniform(0.3, 6.0);
    StateVariables si = equations_of_state(ideal, std::array{U, V});
    REQUIRE(si.T == Catch::Approx(ideal_T(U, 1.0)).epsilon(1e-13));
    REQUIRE(si.P == Catch::Approx(ideal_P(U, V, 1.0)).epsilon(1e-13));
    StateVariables sv = equations_of_state(vdw, std::array{U, V});
    REQUIRE(sv.T == Catch::Approx(vdw_T(U, V, 1.0, 1.0)).epsilon(1e-13));
    REQUIRE(sv.P == Catch::Approx(vdw_P(U, V, 1.0, 1.0, 0.1)).margin(1e-12));
  }
}

TEST_CASE("entropy monotonicity: ideal gas increases everywhere, vdW reports sign") {
  ThermoSystem ideal = ThermoSystem::ideal();
  ThermoSystem vdw = ThermoSystem::vdw();
  double kappa = 1.0, a = 1.0, b = 0.1;
  int vdw_negative = 0, vdw_positive = 0;
  for (int i = 0; i < 20; ++i)
    for (int j = 0; j < 20; ++j) {
      double U = 0.05 + 2.0 * i / 19.0;
      double V = 0.15 + 2.0 * j / 19.0;
      DerivativeBundle di = ideal.derivatives(std::array{U, V}, 1);
      REQUIRE(di.partial({1, 0}) > 0.0);
      REQUIRE(di.partial({0, 1}) > 0.0);
      DerivativeBundle dv = vdw.derivatives(std::array{U, V}, 1);
      REQUIRE(dv.partial({1, 0}) > 0.0);  // dS/dU = (3k/2)/(U + a/V) > 0 on the domain
      // dS/dV sign must match the closed form k/(V-b) - (3ka/2)/(V^2 (U+a/V))
      double closed = kappa / (V - b) - 1.5 * kappa * a / (V * V * (U + a / V));
      double got = dv.partial({0, 1});
      REQUIRE((got > 0) == (closed > 0));
      (got > 0 ? vdw_positive : vdw_negative)++;
    }
  // the vdW entropy is *not* monotone in V over this range; both signs occur
  REQUIRE(vdw_negative > 0);
  REQUIRE(vdw_positive > 0);
}

TEST_CASE("vdW singularity indicator") {
  ThermoSystem vdw = ThermoSystem::vdw();
  SECTION("rejects non-vdW systems") {
    ThermoSystem ideal = ThermoSystem::ideal();
    REQUIRE_THROWS_AS(vdw_singularity_indicator(ideal, std::array{1.0, 1.0}),
                      std::invalid_argument);
  }
  SECTION("a=0 keeps D positive on the interior") {
    ThermoSystem free_gas = ThermoSystem::vdw(1.0, 0.0, 0.0);
    SplitMix64 rng(5);
    for (int i = 0; i < 50; ++i) {
      double U = rng.uniform(0.1, 5.0), V = rng.uniform(0.1, 5.0);
      REQUIRE(vdw_singularity_indicator(free_gas, std::array{U, V}) > 0.0);
    }
  }
  SECTION("bisection root along the U = 0.2 line") {
    auto D = [&](double V) { return vdw_singularity_indicator(vdw, std::array{0.2, V}); };
    REQUIRE(D(0.2) > 0.0);
    REQUIRE(D(1.0) < 0.0);
    double lo = 0.2, hi = 1.0;
    for (int it = 0; it < 200; ++it) {
      double mid = 0.5 * (lo + hi);
      if ((D(mid) < 0) == (D(lo) < 0))
        lo = mid;
      else
        hi = mid;
    }
    double Vstar = 0.5 * (lo + hi);
    REQUIRE(std::abs(D(Vstar)) < 1e-10);
  }
  SECTION("D from (T,P) agrees with symbolic substitution") {
    SplitMix64 rng(23);
    for (int i = 0; i < 50; ++i) {
      double U = rng.uniform(0.2, 5.0), V = rng.uniform(0.3, 5.0);
      double direct = vdw_singularity_indicator(vdw, std::array{U, V});
      double P = vdw_P(U, V, 1.0, 1.0, 0.1);
      double subst = P * V * V * V - 1.0 * V + 2.0 * 1.0 * 0.1;
      REQUIRE(std::abs(direct - subst) <= 1e-12 * std::max(1.0, std::abs(subst)));
    }
  }
}

TEST_CASE("system definition files load and evaluate") {
  const char* text =
      "name = vdw_file ; variables = U, V ; potential = S ;\n"
      "params: kappa = 1.0, a = 1.0, b = 0.1 ;\n"
      "# comment line\n"
      "equation = (3/2)*kappa*ln(U + a/V) + kappa*ln(V - b)";
  ThermoSystem sys = ThermoSystem::from_definition(text);
  REQUIRE(sys.name() == "vdw_file");
  REQUIRE(sys.dof() == 2);
  REQUIRE(sys.potential_name() == "S");
  REQUIRE(sys.parameter("b") == 0.1);
  ThermoSystem ref = ThermoSystem::vdw();
  REQUIRE(sys.potential_value(std::array{1.0, 1.0}) ==
          Catch::Approx(ref.potential_value(std::array{1.0, 1.0})).epsilon(1e-15));

  REQUIRE_THROWS_AS(ThermoSystem::from_definition("name = x ; equation = U"), ConfigError);
  REQUIRE_THROWS_AS(ThermoSystem::from_definition("variables = U ; equation = U + W"), ParseError);
}

TEST_CASE("domain guards refuse out-of-domain points") {
  ThermoSystem vdw = ThermoSystem::vdw();
  REQUIRE(vdw.in_domain(std::array{1.0, 1.0}));
  REQUIRE_FALSE(vdw.in_domain(std::array{1.0, 0.05}));   // V <= b
  REQUIRE_FALSE(vdw.in_domain(std::array{-20.0, 1.0}));  // U + a/V <= 0
  REQUIRE_THROWS_AS(equations_of_state(vdw, std::array{1.0, 0.05}), DomainError);
}

TEST_CASE("equilibrium points cache recomputable derivatives") {
  ThermoSystem vdw = ThermoSystem::vdw();
  EquilibriumPoint p = equilibrium_point(vdw, std::array{1.2, 0.9});
  DerivativeBundle again = vdw.derivatives(p.E, 4);
  REQUIRE(p.derivs.partials == again.partials);
  REQUIRE(vdw_singularity_indicator(vdw, p) ==
          vdw_singularity_indicator(vdw, std::span<const double>(p.E)));
}
