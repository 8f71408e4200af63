#pragma once

#include <array>
#include <optional>
#include <span>
#include <vector>

#include "gtd/chart.hpp"
#include "gtd/phase.hpp"
#include "gtd/system.hpp"

namespace gtd {

// The equilibrium manifold is the image of the embedding
// E -> (Phi(E), E, dPhi/dE), on which the contact form pulls back to zero
// (the first law). The thermodynamic metric g is the pullback of the phase
// metric G through this embedding; its curvature carries the thermodynamic
// interaction.

// Entropy-Hessian metric, written inside the GUP1 family by cancelling the
// conformal scalar: g_ab = Phi_ab. Its determinant vanishes exactly on the
// stability boundary det(Hess Phi) = 0, which for the van der Waals gas is
// the curve P V^3 - a V + 2 a b = 0; the scalar curvature diverges there
// like 1/D^2.
inline MetricSpec hessian_metric() {
  MetricSpec s = MetricSpec::mfo();
  s.lambda = Expression::parse("1/(E1*I1 + E2*I2)", {"E1", "E2", "I1", "I2"});
  return s;
}

// Hessian metric in a conformal gauge regular at the excluded-volume wall
// V = b: g = (V - b)^2 Hess Phi. The gauge factor is smooth and positive on
// the domain interior, so the intrinsic degeneracy stays exactly on
// det(Hess Phi) = 0 and geodesics started near the wall move at moderate
// speed instead of being flung off it.
inline MetricSpec vdw_spinodal_gauge(const ThermoSystem& sys) {
  if (sys.kind() != SystemKind::VanDerWaals)
    throw std::invalid_argument("vdw_spinodal_gauge: not a van der Waals system");
  std::string b = format_double(sys.parameter("b"));
  MetricSpec s = MetricSpec::mfo();
  s.lambda = Expression::parse("(E2 - " + b + ")^2/(E1*I1 + E2*I2)", {"E1", "E2", "I1", "I2"});
  return s;
}

inline PhasePoint lift(const ThermoSystem& sys, std::span<const double> E) {
  const int n = sys.dof();
  DerivativeBundle d = sys.derivatives(E, 1);
  PhasePoint z;
  z.phi = d.value();
  z.E.assign(E.begin(), E.end());
  z.I.resize(n);
  std::vector<int> alpha(n, 0);
  for (int a = 0; a < n; ++a) {
    alpha[a] = 1;
    z.I[a] = d.partial(alpha);
    alpha[a] = 0;
  }
  return z;
}

// The potential and its first two derivative tensors at one point, with a
// generic scalar: doubles give values, jets give exact derivatives of the
// whole metric assembly.
template <class T>
struct PotentialFrame {
  T phi;
  std::vector<T> E;
  std::vector<T> grad;
  Mat<T> hess;
};

inline PotentialFrame<Jet> potential_frame_jets(const ThermoSystem& sys, const Chart& chart,
                                                std::span<const double> x, int order) {
  const int n = sys.dof();
  std::vector<double> E0 = chart.to_E(x);
  const JetSpace& xspace = JetSpace::get(n, order);
  Jet proto(xspace);
  Jet F = sys.potential_jet(E0, order + 2);
  PotentialFrame<Jet> f{proto, {}, {}, Mat<Jet>(n, n, proto)};
  f.E = chart.coordinate_jets(xspace, x);
  f.grad.reserve(n);
  if (chart.kind == Chart::Kind::Raw) {
    f.phi = F.truncated(order);
    for (int a = 0; a < n; ++a) f.grad.push_back(F.derivative(a).truncated(order));
    for (int a = 0; a < n; ++a) {
      Jet da = F.derivative(a);
      for (int b = a; b < n; ++b) {
        f.hess(a, b) = da.derivative(b).truncated(order);
        f.hess(b, a) = f.hess(a, b);
      }
    }
    return f;
  }
  f.phi = compose(F.truncated(order), f.E);
  for (int a = 0; a < n; ++a) f.grad.push_back(compose(F.derivative(a).truncated(order), f.E));
  for (int a = 0; a < n; ++a) {
    Jet da = F.derivative(a);
    for (int b = a; b < n; ++b) {
      f.hess(a, b) = compose(da.derivative(b).truncated(order), f.E);
      f.hess(b, a) = f.hess(a, b);
    }
  }
  return f;
}

inline PotentialFrame<double> potential_frame_values(const ThermoSystem& sys,
                                                     std::span<const double> E) {
  const int n = sys.dof();
  DerivativeBundle d = sys.derivatives(E, 2);
  PotentialFrame<double> f{d.value(), {E.begin(), E.end()}, std::vector<double>(n, 0.0),
                           mat_zeros(n, n)};
  std::vector<int> alpha(n, 0);
  for (int a = 0; a < n; ++a) {
    alpha[a] = 1;
    f.grad[a] = d.partial(alpha);
    for (int b = a; b < n; ++b) {
      ++alpha[b];
      f.hess(a, b) = d.partial(alpha);
      f.hess(b, a) = f.hess(a, b);
      --alpha[b];
    }
    alpha[a] = 0;
  }
  return f;
}

// Closed-form pullback metric in the E coordinates.
//   GINV2: g_ab = Lambda/2 [ (E_a Phi_a)^{2k+1} + (E_b Phi_b)^{2k+1} ] Phi_ab
//   GUP1:  g_ab = Lambda (sum_c xi_c E^c Phi_c) (chi_a + chi_b)/2 Phi_ab
// and for the flat (negative control) phase metric the plain embedding
// pullback delta_ab + Phi_a Phi_b + Phi_ac Phi_cb.
template <class T>
Mat<T> pullback_from_potential(const MetricSpec& spec, const PotentialFrame<T>& f, const T& proto) {
  const int n = static_cast<int>(f.E.size());
  const T zero = make_constant(proto, 0.0);
  const T one = make_constant(proto, 1.0);
  Mat<T> g(n, n, zero);

  if (spec.family == MetricFamily::Flat) {
    for (int a = 0; a < n; ++a)
      for (int b = a; b < n; ++b) {
        T sum = f.grad[a] * f.grad[b];
        if (a == b) sum += 1.0;
        for (int c = 0; c < n; ++c) sum += f.hess(a, c) * f.hess(c, b);
        g(a, b) = sum;
        g(b, a) = g(a, b);
      }
    return g;
  }

  std::vector<T> Z;
  Z.reserve(2 * n + 1);
  Z.push_back(f.phi);
  for (int a = 0; a < n; ++a) Z.push_back(f.E[a]);
  for (int a = 0; a < n; ++a) Z.push_back(f.grad[a]);
  T lam = evaluate_phase_function<T>(spec.lambda, Z, n, proto);

  if (spec.family == MetricFamily::Ginv2) {
    std::vector<T> w;
    w.reserve(n);
    for (int a = 0; a < n; ++a) {
      T prod = f.E[a] * f.grad[a];
      if (2 * spec.k + 1 < 0 && magnitude(prod) == 0.0)
        throw DomainError("pullback metric: E_a Phi_a = 0 with negative power 2k+1");
      w.push_back(pow_int(prod, 2ll * spec.k + 1, one));
    }
    for (int a = 0; a < n; ++a)
      for (int b = a; b < n; ++b) {
        g(a, b) = lam * (w[a] + w[b]) * 0.5 * f.hess(a, b);
        g(b, a) = g(a, b);
      }
    return g;
  }

  T s = zero;
  for (int a = 0; a < n; ++a) s += f.E[a] * f.grad[a] * choice_diag(spec.xi, a);
  for (int a = 0; a < n; ++a)
    for (int b = a; b < n; ++b) {
      double chi = 0.5 * (choice_diag(spec.chi, a) + choice_diag(spec.chi, b));
      g(a, b) = lam * s * chi * f.hess(a, b);
      g(b, a) = g(a, b);
    }
  return g;
}

inline Matd pullback_metric(const ThermoSystem& sys, const MetricSpec& spec,
                            std::span<const double> E) {
  PotentialFrame<double> f = potential_frame_values(sys, E);
  return pullback_from_potential<double>(spec, f, 0.0);
}

// Pullback metric in chart coordinates as jets of the requested order:
// g~_ab(x) = g_cd(E(x)) dE^c/dx^a dE^d/dx^b.
inline Mat<Jet> chart_metric_jets(const ThermoSystem& sys, const MetricSpec& spec,
                                  const Chart& chart, std::span<const double> x, int order) {
  const int n = sys.dof();
  PotentialFrame<Jet> f = potential_frame_jets(sys, chart, x, order);
  Jet proto(JetSpace::get(n, order));
  Mat<Jet> gE = pullback_from_potential<Jet>(spec, f, proto);
  if (chart.kind == Chart::Kind::Raw) return gE;

  const JetSpace& xbig = JetSpace::get(n, order + 1);
  std::vector<Jet> Ebig = chart.coordinate_jets(xbig, x);
  Mat<Jet> J(n, n, proto);
  for (int c = 0; c < n; ++c)
    for (int a = 0; a < n; ++a) J(c, a) = Ebig[c].derivative(a);

  Mat<Jet> g(n, n, proto);
  for (int a = 0; a < n; ++a)
    for (int b = a; b < n; ++b) {
      Jet sum = proto;
      for (int c = 0; c < n; ++c)
        for (int d = 0; d < n; ++d) sum += gE(c, d) * J(c, a) * J(d, b);
      g(a, b) = sum;
      g(b, a) = sum;
    }
  return g;
}

// Second route to g: the Jacobian of the lift contracted with the phase
// metric, component by component. Returns the maximum relative deviation
// against the closed-form pullback.
inline double pullback_consistency(const ThermoSystem& sys, const MetricSpec& spec,
                                   std::span<const double> E) {
  const int n = sys.dof();
  PotentialFrame<double> f = potential_frame_values(sys, E);
  PhasePoint z;
  z.phi = f.phi;
  z.E.assign(E.begin(), E.end());
  z.I = f.grad;
  Matd G = phase_metric(spec, z);
  Matd J = mat_zeros(2 * n + 1, n);
  for (int a = 0; a < n; ++a) {
    J(0, a) = f.grad[a];
    J(1 + a, a) = 1.0;
    for (int b = 0; b < n; ++b) J(1 + n + b, a) = f.hess(b, a);
  }
  Matd embedded = matmul(matmul(transpose(J), G), J);
  Matd closed = pullback_metric(sys, spec, E);
  double scale = std::max(max_abs(embedded), max_abs(closed));
  if (scale == 0.0) return 0.0;
  double worst = 0.0;
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      worst = std::max(worst, std::abs(embedded(a, b) - closed(a, b)) / scale);
  return worst;
}

struct CurvatureReport {
  Matd g, g_inv;
  Tensor3 christoffel;  // Gamma^a_bc
  Tensor4 riemann;      // R^a_bcd = d_c Gamma^a_db - d_d Gamma^a_cb + quadratic terms
  Matd ricci;
  double scalar_R = 0.0;
  double det_g = 0.0;
  std::optional<double> singular_indicator;  // vdW D, when applicable

  // Lowered independent component for n = 2; R = 2 R_1212 / det g.
  double riemann_lowered_1212() const {
    double r = 0.0;
    for (int e = 0; e < 2; ++e) r += g(0, e) * riemann(e, 1, 0, 1);
    return r;
  }
};

// Levi-Civita curvature from a metric given as order-2 jets. Christoffel
// symbols use exact first derivatives of g, the Riemann tensor exact first
// derivatives of Gamma.
inline CurvatureReport curvature_from_metric_jets(const Mat<Jet>& gj) {
  const int n = gj.rows;
  const JetSpace& space1 = JetSpace::get(n, 1);
  Jet proto1(space1);

  CurvatureReport rep;
  rep.g = mat_zeros(n, n);
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) rep.g(a, b) = gj(a, b).value();
  if (!nondegenerate(rep.g))
    throw DegenerateMetricError("pullback metric degenerate at the given point");
  invert(rep.g, rep.g_inv, rep.det_g, 0.0, 1.0);

  Mat<Jet> g1(n, n, proto1);
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) g1(a, b) = gj(a, b).truncated(1);
  Mat<Jet> ginv1(n, n, proto1);
  Jet det1 = proto1;
  invert(g1, ginv1, det1, proto1, Jet(space1, 1.0));

  // dg[c](a,b) = d g_ab / d x^c as order-1 jets (second derivatives retained).
  std::vector<Mat<Jet>> dg;
  dg.reserve(n);
  for (int c = 0; c < n; ++c) {
    Mat<Jet> m(n, n, proto1);
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b) m(a, b) = gj(a, b).derivative(c);
    dg.push_back(std::move(m));
  }

  std::vector<Mat<Jet>> gamma1(n, Mat<Jet>(n, n, proto1));  // Gamma^a as matrix in (b,c)
  rep.christoffel = Tensor3(n);
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      for (int c = b; c < n; ++c) {
        Jet sum = proto1;
        for (int d = 0; d < n; ++d)
          sum += ginv1(a, d) * (dg[c](d, b) + dg[b](c, d) - dg[d](b, c));
        sum = sum * 0.5;
        gamma1[a](b, c) = sum;
        gamma1[a](c, b) = sum;
        rep.christoffel(a, b, c) = sum.value();
        rep.christoffel(a, c, b) = sum.value();
      }

  rep.riemann = Tensor4(n);
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      for (int c = 0; c < n; ++c)
        for (int d = 0; d < n; ++d) {
          double r = gamma1[a](d, b).d1(c) - gamma1[a](c, b).d1(d);
          for (int e = 0; e < n; ++e)
            r += rep.christoffel(a, c, e) * rep.christoffel(e, d, b) -
                 rep.christoffel(a, d, e) * rep.christoffel(e, c, b);
          rep.riemann(a, b, c, d) = r;
        }

  rep.ricci = mat_zeros(n, n);
  for (int b = 0; b < n; ++b)
    for (int d = 0; d < n; ++d) {
      double s = 0.0;
      for (int a = 0; a < n; ++a) s += rep.riemann(a, b, a, d);
      rep.ricci(b, d) = s;
    }
  rep.scalar_R = 0.0;
  for (int b = 0; b < n; ++b)
    for (int d = 0; d < n; ++d) rep.scalar_R += rep.g_inv(b, d) * rep.ricci(b, d);
  return rep;
}

inline CurvatureReport curvature_in_chart(const ThermoSystem& sys, const MetricSpec& spec,
                                          const Chart& chart, std::span<const double> x) {
  CurvatureReport rep = curvature_from_metric_jets(chart_metric_jets(sys, spec, chart, x, 2));
  if (sys.kind() == SystemKind::VanDerWaals) {
    std::vector<double> E = chart.to_E(x);
    rep.singular_indicator = vdw_singularity_indicator(sys, E);
  }
  return rep;
}

inline CurvatureReport curvature(const ThermoSystem& sys, const MetricSpec& spec,
                                 std::span<const double> E) {
  return curvature_in_chart(sys, spec, Chart::raw(), E);
}

// Scalar curvature of the Legendre-transformed equilibrium manifold at the
// image of E, computed parametrically: the transformed embedding
// E -> L(lift(E)) is pushed through the same metric family, and the scalar
// curvature of the induced metric is reparametrization invariant. When G is
// Legendre invariant this must reproduce curvature(...).scalar_R.
inline double transformed_scalar_curvature(const ThermoSystem& sys, const MetricSpec& spec,
                                           const LegendreIndexSet& idx, std::span<const double> E) {
  const int n = sys.dof();
  for (int i : idx.idx)
    if (i < 0 || i >= n)
      throw std::invalid_argument("transformed_scalar_curvature: index out of range");
  const JetSpace& space3 = JetSpace::get(n, 3);
  const JetSpace& space2 = JetSpace::get(n, 2);
  Jet proto2(space2);
  Jet F = sys.potential_jet(E, 4);

  std::vector<Jet> Ej, grad;
  for (int a = 0; a < n; ++a) {
    Ej.push_back(Jet::variable(space3, a, E[a]));
    grad.push_back(F.derivative(a));
  }
  std::vector<Jet> zt(2 * n + 1, Jet(space3));
  zt[0] = F.truncated(3);
  for (int i : idx.idx) zt[0] -= Ej[i] * grad[i];
  for (int a = 0; a < n; ++a) {
    if (idx.contains(a)) {
      zt[1 + a] = grad[a];
      zt[1 + n + a] = -Ej[a];
    } else {
      zt[1 + a] = Ej[a];
      zt[1 + n + a] = grad[a];
    }
  }

  std::vector<Jet> zt2;
  zt2.reserve(zt.size());
  for (const Jet& j : zt) zt2.push_back(j.truncated(2));
  Mat<Jet> G = phase_metric_components<Jet>(spec, zt2, proto2);

  Mat<Jet> J(2 * n + 1, n, proto2);
  for (int A = 0; A < 2 * n + 1; ++A)
    for (int a = 0; a < n; ++a) J(A, a) = zt[A].derivative(a);

  Mat<Jet> ghat(n, n, proto2);
  for (int a = 0; a < n; ++a)
    for (int b = a; b < n; ++b) {
      Jet sum = proto2;
      for (int A = 0; A < 2 * n + 1; ++A)
        for (int B = 0; B < 2 * n + 1; ++B) sum += J(A, a) * J(B, b) * G(A, B);
      ghat(a, b) = sum;
      ghat(b, a) = sum;
    }
  return curvature_from_metric_jets(ghat).scalar_R;
}

enum class SecondLawClass { Concave, Convex, Indefinite, Degenerate };

inline const char* to_string(SecondLawClass c) {
  switch (c) {
    case SecondLawClass::Concave: return "concave";
    case SecondLawClass::Convex: return "convex";
    case SecondLawClass::Indefinite: return "indefinite";
    case SecondLawClass::Degenerate: return "degenerate";
  }
  return "?";
}

// Eigenvalue-sign classification of the Hessian Phi_ab. The second law pins
// a definite sign only once the potential is identified; this reports the
// signature and leaves the identification to the caller.
inline SecondLawClass second_law_classify(const ThermoSystem& sys, std::span<const double> E) {
  PotentialFrame<double> f = potential_frame_values(sys, E);
  std::vector<double> ev = symmetric_eigenvalues(f.hess);
  double scale = 0.0;
  for (double v : ev) scale = std::max(scale, std::abs(v));
  double tol = 1e-9 * std::max(1.0, scale);
  bool any_pos = false, any_neg = false, any_zero = false;
  for (double v : ev) {
    if (v > tol)
      any_pos = true;
    else if (v < -tol)
      any_neg = true;
    else
      any_zero = true;
  }
  if (any_zero) return SecondLawClass::Degenerate;
  if (any_pos && any_neg) return SecondLawClass::Indefinite;
  return any_pos ? SecondLawClass::Convex : SecondLawClass::Concave;
}

struct SingularRoot {
  double U = 0.0, V = 0.0;     // root location (D = 0 crossing)
  double D_at_root = 0.0;      // residual after bisection
  std::array<double, 3> offsets{};   // probe distances d, d/2, d/4
  std::array<double, 3> abs_R{};     // |scalar R| at the probes
  std::array<double, 3> abs_D{};     // |D| at the probes
  double loglog_slope = 0.0;         // fit of log|R| against log|D|
};

// Bisection roots of D along fixed-U grid lines, each tagged with the scalar
// curvature at offset points so divergence (R ~ 1/D^2) can be confirmed.
inline std::vector<SingularRoot> singular_curve_scan(const ThermoSystem& sys,
                                                     const MetricSpec& spec,
                                                     std::span<const double> U_values, double V_lo,
                                                     double V_hi, int subdivisions,
                                                     double probe_distance = 1e-2) {
  if (sys.kind() != SystemKind::VanDerWaals)
    throw std::invalid_argument("singular_curve_scan: not a van der Waals system");
  std::vector<SingularRoot> roots;
  for (double U : U_values) {
    auto D_at = [&](double V) { return vdw_singularity_indicator(sys, std::array{U, V}); };
    double prevV = V_lo, prevD = D_at(V_lo);
    for (int i = 1; i <= subdivisions; ++i) {
      double V = V_lo + (V_hi - V_lo) * i / subdivisions;
      double D = D_at(V);
      if (prevD == 0.0 || (prevD < 0) == (D < 0)) {
        prevV = V;
        prevD = D;
        continue;
      }
      double lo = prevV, hi = V, Dlo = prevD;
      for (int it = 0; it < 200; ++it) {
        double mid = 0.5 * (lo + hi);
        double Dm = D_at(mid);
        if (Dm == 0.0) {
          lo = hi = mid;
          break;
        }
        if ((Dm < 0) == (Dlo < 0)) {
          lo = mid;
          Dlo = Dm;
        } else {
          hi = mid;
        }
        if (hi - lo < 1e-16 * std::max(1.0, std::abs(mid))) break;
      }
      SingularRoot root;
      root.U = U;
      root.V = 0.5 * (lo + hi);
      root.D_at_root = D_at(root.V);
      for (int j = 0; j < 3; ++j) {
        double d = probe_distance / (1 << j);
        double Vp = root.V + d;
        root.offsets[j] = d;
        root.abs_D[j] = std::abs(D_at(Vp));
        root.abs_R[j] = std::abs(curvature(sys, spec, std::array{U, Vp}).scalar_R);
      }
      // Least-squares slope of log|R| vs log|D| over the three probes.
      double sx = 0, sy = 0, sxx = 0, sxy = 0;
      for (int j = 0; j < 3; ++j) {
        double lx = std::log(root.abs_D[j]), ly = std::log(root.abs_R[j]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
      }
      root.loglog_slope = (3 * sxy - sx * sy) / (3 * sxx - sx * sx);
      roots.push_back(root);
      prevV = V;
      prevD = D;
    }
  }
  return roots;
}

}  // namespace gtd
