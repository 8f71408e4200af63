#pragma once

#include <array>
#include <span>
#include <vector>

#include "gtd/equilibrium.hpp"

namespace gtd {

// The equilibrium manifold must be an extremal hypersurface of the phase
// manifold: the embedding Z(E) solves the harmonic-map field equations
//
//   (1/sqrt|det g|) ( sqrt|det g| g^{ab} Z^A_{,a} )_{,b}
//       + Gamma^A_BC Z^B_{,b} Z^C_{,c} g^{bc} = 0 .
//
// harmonic_residual evaluates the left side exactly (the divergence is
// differentiated through the closed-form jet composition, not by finite
// differences).

inline std::vector<double> harmonic_residual(const ThermoSystem& sys, const MetricSpec& spec,
                                             std::span<const double> E) {
  const int n = sys.dof();
  const int dim = 2 * n + 1;
  const JetSpace& space1 = JetSpace::get(n, 1);
  Jet proto1(space1);

  Jet F = sys.potential_jet(E, 3);
  PotentialFrame<Jet> f{proto1, {}, {}, Mat<Jet>(n, n, proto1)};
  f.phi = F.truncated(1);
  for (int a = 0; a < n; ++a) {
    f.E.push_back(Jet::variable(space1, a, E[a]));
    f.grad.push_back(F.derivative(a).truncated(1));
  }
  for (int a = 0; a < n; ++a) {
    Jet da = F.derivative(a);
    for (int b = a; b < n; ++b) {
      f.hess(a, b) = da.derivative(b).truncated(1);
      f.hess(b, a) = f.hess(a, b);
    }
  }

  // dZ(A, a) = Z^A_{,a} as order-1 jets.
  Mat<Jet> dZ(dim, n, proto1);
  for (int a = 0; a < n; ++a) {
    dZ(0, a) = f.grad[a];
    for (int b = 0; b < n; ++b) {
      dZ(1 + b, a) = Jet(space1, b == a ? 1.0 : 0.0);
      dZ(1 + n + b, a) = f.hess(b, a);
    }
  }

  Mat<Jet> g = pullback_from_potential<Jet>(spec, f, proto1);
  Matd g0 = mat_zeros(n, n);
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) g0(a, b) = g(a, b).value();
  if (!nondegenerate(g0))
    throw DegenerateMetricError("harmonic residual: pullback metric degenerate");
  Mat<Jet> ginv(n, n, proto1);
  Jet det = proto1;
  invert(g, ginv, det, proto1, Jet(space1, 1.0));
  Jet W = det.value() < 0.0 ? pow(-det, 0.5) : pow(det, 0.5);
  double W0 = W.value();

  PhasePoint z;
  z.phi = f.phi.value();
  z.E.assign(E.begin(), E.end());
  z.I.resize(n);
  for (int a = 0; a < n; ++a) z.I[a] = f.grad[a].value();
  Tensor3 Gamma = phase_christoffel(spec, z);  // checks phase-metric degeneracy

  std::vector<double> res(dim, 0.0);
  for (int A = 0; A < dim; ++A) {
    double divergence = 0.0;
    for (int b = 0; b < n; ++b) {
      Jet flux = proto1;
      for (int a = 0; a < n; ++a) flux += W * ginv(a, b) * dZ(A, a);
      divergence += flux.d1(b);
    }
    double quad = 0.0;
    for (int B = 0; B < dim; ++B)
      for (int C = 0; C < dim; ++C) {
        double zz = 0.0;
        for (int b = 0; b < n; ++b)
          for (int c = 0; c < n; ++c)
            zz += dZ(B, b).value() * dZ(C, c).value() * ginv(b, c).value();
        quad += Gamma(A, B, C) * zz;
      }
    res[A] = divergence / W0 + quad;
  }
  return res;
}

// A candidate conformal factor Lambda over the phase coordinates (named
// Z0..Z2n or Phi/E*/I*), paired with the integer k of the GINV2 family.
struct LambdaAnsatz {
  Expression expr;
  int k = -1;

  static LambdaAnsatz constant(double value, int k) { return {Expression::constant(value), k}; }
};

// Left sides of the two first-order conditions the field equations reduce to
// for the ideal gas in the entropy representation:
//   dLambda/dU + (3 kappa / 2U^2) dLambda/dZ3 + 2(k+1) Lambda / U = 0
//   dLambda/dV + (kappa / V^2)    dLambda/dZ4 + 2(k+1) Lambda / V = 0
// with Lambda's partials taken at the lifted point (S, U, V, 3k/2U, k/V).
inline std::array<double, 2> ideal_gas_conditions(const LambdaAnsatz& ansatz, double U, double V,
                                                  double kappa) {
  if (!(U > 0.0) || !(V > 0.0))
    throw DomainError("ideal_gas_conditions: U and V must be positive");
  const int n = 2;
  std::array<double, 5> Z{};
  Z[1] = U;
  Z[2] = V;
  Z[3] = 1.5 * kappa / U;
  Z[4] = kappa / V;
  Z[0] = 1.5 * kappa * std::log(U) + kappa * std::log(V);

  std::vector<int> binding = bind_phase_coordinates(ansatz.expr, n);
  const JetSpace& space = JetSpace::get(std::max<int>(1, static_cast<int>(binding.size())), 1);
  std::vector<Jet> vars;
  for (size_t i = 0; i < binding.size(); ++i)
    vars.push_back(Jet::variable(space, static_cast<int>(i), Z[binding[i]]));
  Jet lam = ansatz.expr.evaluate_scalar<Jet>(vars, {}, Jet(space));

  std::array<double, 5> dlam{};
  for (size_t i = 0; i < binding.size(); ++i) dlam[binding[i]] += lam.d1(static_cast<int>(i));

  double c1 = dlam[1] + 1.5 * kappa / (U * U) * dlam[3] + 2.0 * (ansatz.k + 1) * lam.value() / U;
  double c2 = dlam[2] + kappa / (V * V) * dlam[4] + 2.0 * (ansatz.k + 1) * lam.value() / V;
  return {c1, c2};
}

// Verifies the reduction claim: the nontrivial components of the harmonic
// residual (the intensive block, A = n+1..2n) must be proportional to the
// two reduced conditions across the samples. A single scale per component is
// fitted by least squares; the return value is the worst mismatch after the
// fit, normalized by the larger of 1 and the data magnitude.
inline double conditions_consistency(const ThermoSystem& sys, const LambdaAnsatz& ansatz,
                                     std::span<const std::vector<double>> samples) {
  if (sys.kind() != SystemKind::IdealGas)
    throw std::invalid_argument("conditions_consistency: ideal gas only");
  const int n = sys.dof();
  double kappa = sys.parameter("kappa");
  MetricSpec spec = MetricSpec::ginv2(ansatz.k, ansatz.expr);

  std::vector<std::array<double, 2>> resid, cond;
  for (const auto& E : samples) {
    std::vector<double> r = harmonic_residual(sys, spec, E);
    resid.push_back({r[n + 1], r[n + 2]});
    cond.push_back(ideal_gas_conditions(ansatz, E[0], E[1], kappa));
  }

  double worst = 0.0;
  for (int comp = 0; comp < 2; ++comp) {
    double num = 0.0, den = 0.0, rmax = 0.0, cmax = 0.0;
    for (size_t i = 0; i < resid.size(); ++i) {
      num += resid[i][comp] * cond[i][comp];
      den += cond[i][comp] * cond[i][comp];
      rmax = std::max(rmax, std::abs(resid[i][comp]));
      cmax = std::max(cmax, std::abs(cond[i][comp]));
    }
    double s = den > 0.0 ? num / den : 0.0;
    double scale = std::max({1.0, rmax, std::abs(s) * cmax});
    for (size_t i = 0; i < resid.size(); ++i)
      worst = std::max(worst, std::abs(resid[i][comp] - s * cond[i][comp]) / scale);
  }
  return worst;
}

}  // namespace gtd
