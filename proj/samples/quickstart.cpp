// Minimal tour of the library: build a system, look at its thermodynamic
// metric and curvature, run a geodesic, and check a Legendre transform.

#include <cstdio>

#include "gtd/gtd.hpp"

using namespace gtd;

int main() {
  // Built-in systems; custom ones load from definition files or strings.
  ThermoSystem ideal = ThermoSystem::ideal();
  ThermoSystem vdw = ThermoSystem::vdw();  // kappa = 1, a = 1, b = 0.1

  // Equations of state follow from the fundamental equation.
  StateVariables sv = equations_of_state(ideal, std::array{1.5, 1.0});
  std::printf("ideal gas at (U, V) = (1.5, 1):  T = %g,  P = %g\n", sv.T, sv.P);

  // The k = -1 member of the invariant family makes the ideal gas flat.
  MetricSpec spec = MetricSpec::ginv2(-1, -1.0);
  CurvatureReport flat = curvature(ideal, spec, std::array{2.0, 4.0});
  std::printf("ideal gas scalar curvature at (2, 4): %g\n", flat.scalar_R);

  // The van der Waals gas is curved; D = P V^3 - a V + 2 a b tracks its
  // first-order phase transitions.
  CurvatureReport rep = curvature(vdw, MetricSpec::ginv2(-1, 1.0), std::array{1.0, 1.0});
  std::printf("vdW scalar curvature at (1, 1): %g   (D = %g)\n", rep.scalar_R,
              *rep.singular_indicator);

  // Geodesics of the flat metric are straight lines in the log chart.
  GeodesicTrace trace = integrate(ideal, spec, Chart::log_chart(), std::array{0.0, 0.0},
                                  std::array{1.0, 1.0}, 2.0, 1e-2);
  std::printf("log-chart geodesic endpoint: (%g, %g), status %s, %s\n",
              trace.samples.back().x[0], trace.samples.back().x[1], to_string(trace.status),
              to_string(admissibility(trace)));

  // Legendre transformations act on the phase manifold; the invariant
  // metrics pull back congruently.
  PhasePoint z = lift(ideal, std::array{1.5, 1.0});
  PhasePoint dual = legendre_transform(z, LegendreIndexSet::total(2));
  std::printf("total Legendre transform of the lifted point: Phi~ = %g\n", dual.phi);
  return 0;
}
