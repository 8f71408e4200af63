#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gtd/expr.hpp"
#include "gtd/smallmat.hpp"

namespace gtd {

// The (2n+1)-dimensional phase manifold carries coordinates
// Z = (Phi, E^1..E^n, I^1..I^n): the potential, the extensive variables and
// the intensive variables, all independent. Coordinate order is fixed as
// written; index 0 is Phi, 1..n the E block, n+1..2n the I block.

struct PhasePoint {
  double phi = 0.0;
  std::vector<double> E, I;

  PhasePoint() = default;
  PhasePoint(double phi_, std::vector<double> E_, std::vector<double> I_)
      : phi(phi_), E(std::move(E_)), I(std::move(I_)) {
    if (E.size() != I.size()) throw std::invalid_argument("phase point: len(E) != len(I)");
  }

  int dof() const { return static_cast<int>(E.size()); }
  int dim() const { return 2 * dof() + 1; }

  std::vector<double> coords() const {
    std::vector<double> z;
    z.reserve(dim());
    z.push_back(phi);
    z.insert(z.end(), E.begin(), E.end());
    z.insert(z.end(), I.begin(), I.end());
    return z;
  }

  static PhasePoint from_coords(std::span<const double> z) {
    int n = (static_cast<int>(z.size()) - 1) / 2;
    PhasePoint p;
    p.phi = z[0];
    p.E.assign(z.begin() + 1, z.begin() + 1 + n);
    p.I.assign(z.begin() + 1 + n, z.end());
    return p;
  }
};

// Subset of {1..n} selecting which extensive/intensive pairs a Legendre
// transformation swaps; empty is the identity, the full set the total
// transformation. Stored 0-based.
struct LegendreIndexSet {
  std::vector<int> idx;

  static LegendreIndexSet none() { return {}; }
  static LegendreIndexSet total(int n) {
    LegendreIndexSet s;
    for (int i = 0; i < n; ++i) s.idx.push_back(i);
    return s;
  }
  static LegendreIndexSet of(std::initializer_list<int> zero_based) { return {{zero_based}}; }

  bool contains(int i) const {
    for (int j : idx)
      if (j == i) return true;
    return false;
  }
};

// Forward transform: Etilde^i = I^i, Itilde^i = -E^i on the selected pairs,
// identity elsewhere, and Phitilde = Phi - sum_idx E^i I^i.
inline PhasePoint legendre_transform(const PhasePoint& z, const LegendreIndexSet& s) {
  const int n = z.dof();
  PhasePoint out = z;
  for (int i : s.idx) {
    if (i < 0 || i >= n) throw std::invalid_argument("legendre_transform: index out of range");
    out.E[i] = z.I[i];
    out.I[i] = -z.E[i];
    out.phi += out.E[i] * out.I[i];
  }
  return out;
}

// Jacobian d(Ztilde)/dZ of the forward transform at z.
inline Matd legendre_jacobian(const PhasePoint& z, const LegendreIndexSet& s) {
  const int n = z.dof();
  Matd J = mat_zeros(z.dim(), z.dim());
  J(0, 0) = 1.0;
  for (int a = 0; a < n; ++a) {
    if (s.contains(a)) {
      J(0, 1 + a) = -z.I[a];
      J(0, 1 + n + a) = -z.E[a];
      J(1 + a, 1 + n + a) = 1.0;
      J(1 + n + a, 1 + a) = -1.0;
    } else {
      J(1 + a, 1 + a) = 1.0;
      J(1 + n + a, 1 + n + a) = 1.0;
    }
  }
  return J;
}

// Components of Theta = dPhi - I_a dE^a in coordinate order (Phi, E, I).
inline std::vector<double> contact_form(const PhasePoint& z) {
  std::vector<double> theta(z.dim(), 0.0);
  theta[0] = 1.0;
  for (int a = 0; a < z.dof(); ++a) theta[1 + a] = -z.I[a];
  return theta;
}

// Sparse alternating forms over coordinate labels, enough exterior algebra to
// expand Theta ^ (dTheta)^n by brute force.
class AltForm {
public:
  explicit AltForm(int dim) : dim_(dim) {}

  static AltForm one_form(std::span<const double> comps) {
    AltForm f(static_cast<int>(comps.size()));
    for (int i = 0; i < f.dim_; ++i)
      if (comps[i] != 0.0) f.terms_[{i}] = comps[i];
    return f;
  }

  void add_term(std::vector<int> idx, double c) {
    double sign = sort_sign(idx);
    if (sign == 0.0 || c == 0.0) return;
    terms_[idx] += sign * c;
  }

  friend AltForm wedge(const AltForm& a, const AltForm& b) {
    AltForm out(a.dim_);
    for (const auto& [ia, ca] : a.terms_)
      for (const auto& [ib, cb] : b.terms_) {
        std::vector<int> idx = ia;
        idx.insert(idx.end(), ib.begin(), ib.end());
        out.add_term(std::move(idx), ca * cb);
      }
    return out;
  }

  // Signed coefficient relative to the given (not necessarily sorted) index
  // order.
  double coefficient(std::vector<int> idx) const {
    double sign = sort_sign(idx);
    if (sign == 0.0) return 0.0;
    auto it = terms_.find(idx);
    return it == terms_.end() ? 0.0 : sign * it->second;
  }

private:
  // Sorts indices, returns the permutation parity, or 0 on a repeated index.
  static double sort_sign(std::vector<int>& idx) {
    double sign = 1.0;
    for (size_t i = 1; i < idx.size(); ++i)
      for (size_t j = i; j > 0 && idx[j] < idx[j - 1]; --j) {
        std::swap(idx[j], idx[j - 1]);
        sign = -sign;
      }
    for (size_t i = 1; i < idx.size(); ++i)
      if (idx[i] == idx[i - 1]) return 0.0;
    return sign;
  }

  int dim_;
  std::map<std::vector<int>, double> terms_;
};

// Coefficient of theta ^ (dtheta)^n relative to the reference volume order
// dPhi ^ dE^1 ^ dI^1 ^ ... ^ dE^n ^ dI^n.
inline double contact_coefficient(const AltForm& theta, const AltForm& dtheta, int n) {
  AltForm w = theta;
  for (int k = 0; k < n; ++k) w = wedge(w, dtheta);
  std::vector<int> ref;
  ref.push_back(0);
  for (int a = 0; a < n; ++a) {
    ref.push_back(1 + a);
    ref.push_back(1 + n + a);
  }
  return w.coefficient(std::move(ref));
}

// Maximal non-integrability coefficient for the canonical contact form; its
// magnitude is n! and it must be nonzero for (T, Theta) to be contact.
inline double contact_condition(int n) {
  if (n < 1) throw std::invalid_argument("contact_condition: n >= 1 required");
  PhasePoint z;
  z.phi = 0.0;
  for (int a = 0; a < n; ++a) {
    z.E.push_back(1.0);
    z.I.push_back(0.7 + 0.1 * a);  // coefficient is independent of the point
  }
  std::vector<double> theta_comps = contact_form(z);
  AltForm theta = AltForm::one_form(theta_comps);
  AltForm dtheta(z.dim());
  for (int a = 0; a < n; ++a) dtheta.add_term({1 + a, 1 + n + a}, 1.0);
  return contact_coefficient(theta, dtheta, n);
}

// Negative control: an exact 1-form dPhi generates an integrable hyperplane
// field, so the coefficient collapses to zero.
inline double contact_condition_integrable_control(int n) {
  std::vector<double> comps(2 * n + 1, 0.0);
  comps[0] = 1.0;
  AltForm theta = AltForm::one_form(comps);
  AltForm dtheta(2 * n + 1);  // d(dPhi) = 0
  return contact_coefficient(theta, dtheta, n);
}

// Legendre-invariant metric families on the phase manifold. GINV2 is
// Theta^2 + Lambda (E_a I_a)^(2k+1) dE^a dI^a, invariant under partial and
// total transformations; GUP1 is Theta^2 + Lambda (xi_ab E^a I^b)(chi_cd dE^c dI^d)
// with constant diagonal xi, chi, invariant under total transformations for
// the shipped choices. FLAT is the non-invariant Euclidean negative control.
enum class MetricFamily { Ginv2, Gup1, Flat };
enum class TensorChoice { Delta, Eta, HalfDeltaMinusEta };

inline double choice_diag(TensorChoice c, int a) {
  switch (c) {
    case TensorChoice::Delta:
      return 1.0;
    case TensorChoice::Eta:
      return a == 0 ? -1.0 : 1.0;
    case TensorChoice::HalfDeltaMinusEta:
      return a == 0 ? 1.0 : 0.0;
  }
  return 0.0;
}

struct MetricSpec {
  MetricFamily family = MetricFamily::Ginv2;
  int k = -1;                                    // GINV2 only
  Expression lambda = Expression::constant(1.0); // conformal factor Lambda(E, I)
  TensorChoice xi = TensorChoice::Delta;         // GUP1 only
  TensorChoice chi = TensorChoice::Delta;

  static MetricSpec ginv2(int k, double lam = 1.0) {
    MetricSpec s;
    s.family = MetricFamily::Ginv2;
    s.k = k;
    s.lambda = Expression::constant(lam);
    return s;
  }
  static MetricSpec ginv2(int k, Expression lam) {
    MetricSpec s;
    s.family = MetricFamily::Ginv2;
    s.k = k;
    s.lambda = std::move(lam);
    return s;
  }
  static MetricSpec gup1(TensorChoice xi, TensorChoice chi, double lam = 1.0) {
    MetricSpec s;
    s.family = MetricFamily::Gup1;
    s.xi = xi;
    s.chi = chi;
    s.lambda = Expression::constant(lam);
    return s;
  }
  // The three shipped (xi, chi) choices.
  static MetricSpec mfo(double lam = 1.0) { return gup1(TensorChoice::Delta, TensorChoice::Delta, lam); }
  static MetricSpec mso(double lam = 1.0) { return gup1(TensorChoice::Delta, TensorChoice::Eta, lam); }
  static MetricSpec msot0(double lam = 1.0) {
    return gup1(TensorChoice::HalfDeltaMinusEta, TensorChoice::Eta, lam);
  }
  static MetricSpec flat() {
    MetricSpec s;
    s.family = MetricFamily::Flat;
    return s;
  }
};

// Maps the declared variables of a Lambda expression onto phase-coordinate
// slots. Accepted names: Phi or Z0 for the potential, E1..En / I1..In for the
// blocks, Z1..Z2n as positional aliases.
inline std::vector<int> bind_phase_coordinates(const Expression& e, int n) {
  std::vector<int> binding;
  for (const std::string& name : e.variables()) {
    int slot = -1;
    if (name == "Phi") {
      slot = 0;
    } else if (name.size() >= 2 && (name[0] == 'E' || name[0] == 'I' || name[0] == 'Z')) {
      int num = -1;
      try {
        size_t used = 0;
        num = std::stoi(name.substr(1), &used);
        if (used != name.size() - 1) num = -1;
      } catch (...) {
        num = -1;
      }
      if (num >= 0) {
        if (name[0] == 'E' && num >= 1 && num <= n) slot = num;
        if (name[0] == 'I' && num >= 1 && num <= n) slot = n + num;
        if (name[0] == 'Z' && num >= 0 && num <= 2 * n) slot = num;
      }
    }
    if (slot < 0)
      throw ConfigError("conformal factor: cannot bind variable '" + name +
                        "' to a phase coordinate (expected Phi, E1..E" + std::to_string(n) +
                        ", I1..I" + std::to_string(n) + " or Z0..Z" + std::to_string(2 * n) + ")");
    binding.push_back(slot);
  }
  return binding;
}

template <class T>
T evaluate_phase_function(const Expression& e, std::span<const T> Z, int n, const T& proto) {
  std::vector<int> binding = bind_phase_coordinates(e, n);
  std::vector<T> vars;
  vars.reserve(binding.size());
  for (int slot : binding) vars.push_back(Z[slot]);
  return e.evaluate_scalar<T>(vars, {}, proto);
}

// Metric components G_AB at phase coordinates Z, generic over the scalar so
// the same assembly yields values (double) and exact derivatives (Jet). A
// line-element cross term c dE^a dI^a contributes c/2 to each of the two
// symmetric matrix slots.
template <class T>
Mat<T> phase_metric_components(const MetricSpec& spec, std::span<const T> Z, const T& proto) {
  const int dim = static_cast<int>(Z.size());
  const int n = (dim - 1) / 2;
  const T zero = make_constant(proto, 0.0);
  const T one = make_constant(proto, 1.0);
  Mat<T> G(dim, dim, zero);

  if (spec.family == MetricFamily::Flat) {
    for (int A = 0; A < dim; ++A) G(A, A) = one;
    return G;
  }

  // Theta^2 block: outer product of (1, -I, 0).
  std::vector<T> theta(static_cast<size_t>(dim), zero);
  theta[0] = one;
  for (int a = 0; a < n; ++a) theta[1 + a] = -Z[1 + n + a];
  for (int A = 0; A < dim; ++A)
    for (int B = 0; B < dim; ++B) G(A, B) += theta[A] * theta[B];

  T lam = evaluate_phase_function(spec.lambda, Z, n, proto);

  if (spec.family == MetricFamily::Ginv2) {
    for (int a = 0; a < n; ++a) {
      T prod = Z[1 + a] * Z[1 + n + a];
      if (2 * spec.k + 1 < 0 && magnitude(prod) == 0.0)
        throw DomainError("phase metric: E_a I_a = 0 with negative power 2k+1");
      T c = lam * pow_int(prod, 2ll * spec.k + 1, one);
      G(1 + a, 1 + n + a) += c * 0.5;
      G(1 + n + a, 1 + a) += c * 0.5;
    }
    return G;
  }

  // GUP1: conformal scalar (xi_ab E^a I^b) times (chi_cd dE^c dI^d).
  T s = zero;
  for (int a = 0; a < n; ++a) s += Z[1 + a] * Z[1 + n + a] * choice_diag(spec.xi, a);
  for (int c = 0; c < n; ++c) {
    double chi = choice_diag(spec.chi, c);
    if (chi == 0.0) continue;
    T coeff = lam * s * chi;
    G(1 + c, 1 + n + c) += coeff * 0.5;
    G(1 + n + c, 1 + c) += coeff * 0.5;
  }
  return G;
}

inline Matd phase_metric(const MetricSpec& spec, const PhasePoint& z) {
  std::vector<double> Z = z.coords();
  return phase_metric_components<double>(spec, Z, 0.0);
}

inline Mat<Jet> phase_metric_jets(const MetricSpec& spec, const PhasePoint& z, int order) {
  std::vector<double> Z = z.coords();
  const JetSpace& space = JetSpace::get(z.dim(), order);
  std::vector<Jet> Zj;
  Zj.reserve(Z.size());
  for (size_t A = 0; A < Z.size(); ++A)
    Zj.push_back(Jet::variable(space, static_cast<int>(A), Z[A]));
  return phase_metric_components<Jet>(spec, Zj, Jet(space));
}

// Christoffel symbols of G from exact derivatives of the closed-form
// components.
inline Tensor3 phase_christoffel(const MetricSpec& spec, const PhasePoint& z) {
  const int dim = z.dim();
  Mat<Jet> Gj = phase_metric_jets(spec, z, 1);
  Matd G0 = mat_zeros(dim, dim);
  for (int A = 0; A < dim; ++A)
    for (int B = 0; B < dim; ++B) G0(A, B) = Gj(A, B).value();
  if (!nondegenerate(G0)) throw DegenerateMetricError("phase metric degenerate at the given point");
  Matd Ginv;
  double det = 0.0;
  invert(G0, Ginv, det, 0.0, 1.0);

  Tensor3 gamma(dim);
  for (int A = 0; A < dim; ++A)
    for (int B = 0; B < dim; ++B)
      for (int C = B; C < dim; ++C) {
        double sum = 0.0;
        for (int D = 0; D < dim; ++D) {
          double term = Gj(D, B).d1(C) + Gj(C, D).d1(B) - Gj(B, C).d1(D);
          sum += Ginv(A, D) * term;
        }
        gamma(A, B, C) = 0.5 * sum;
        gamma(A, C, B) = gamma(A, B, C);
      }
  return gamma;
}

// Pulls G back through the Legendre coordinate change (Jacobian congruence)
// and compares with G evaluated at the transformed point. Returns the maximum
// relative component deviation over the samples; invariant metrics come back
// at rounding level, the flat control at O(1).
inline double check_metric_invariance(const MetricSpec& spec, const LegendreIndexSet& idx,
                                      std::span<const PhasePoint> samples) {
  double worst = 0.0;
  for (const PhasePoint& z : samples) {
    Matd G = phase_metric(spec, z);
    PhasePoint zt = legendre_transform(z, idx);
    Matd Gt = phase_metric(spec, zt);
    Matd J = legendre_jacobian(z, idx);
    Matd pulled = matmul(matmul(transpose(J), Gt), J);
    double scale = std::max(max_abs(G), max_abs(pulled));
    if (scale == 0.0) continue;
    for (int A = 0; A < G.rows; ++A)
      for (int B = 0; B < G.cols; ++B)
        worst = std::max(worst, std::abs(pulled(A, B) - G(A, B)) / scale);
  }
  return worst;
}

}  // namespace gtd
