#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <vector>

#include "gtd/errors.hpp"

namespace gtd {

// Truncated multivariate Taylor arithmetic ("jets"): a Jet carries the value
// and all Taylor coefficients of a smooth function at a point, up to a fixed
// total degree. Arithmetic on jets propagates derivatives exactly, so every
// derivative this library reports is exact in floating point, never a finite
// difference.

// Slot bookkeeping for n variables at total degree <= order. Slots enumerate
// exponent tuples in graded order; the slots of degree <= m-1 coincide with
// the slots of the (n, m-1) space, which makes truncation a prefix copy.
class JetSpace {
public:
  static constexpr int kMaxOrder = 4;
  static constexpr int kMaxVars = 27;  // base-5 packing in 64 bits

  static const JetSpace& get(int nvars, int order) {
    static std::mutex mu;
    static std::map<std::pair<int, int>, std::unique_ptr<JetSpace>> registry;
    std::scoped_lock lock(mu);
    auto key = std::make_pair(nvars, order);
    auto it = registry.find(key);
    if (it == registry.end())
      it = registry.emplace(key, std::unique_ptr<JetSpace>(new JetSpace(nvars, order))).first;
    return *it->second;
  }

  int nvars() const { return nvars_; }
  int order() const { return order_; }
  int size() const { return static_cast<int>(exps_.size()) / std::max(nvars_, 1); }

  std::span<const int> exponents(int slot) const {
    return {exps_.data() + static_cast<size_t>(slot) * nvars_, static_cast<size_t>(nvars_)};
  }
  int degree(int slot) const { return degree_[slot]; }
  double factorial(int slot) const { return factorial_[slot]; }

  // Slot of a multi-index, or -1 when its total degree exceeds the order.
  int slot(std::span<const int> alpha) const {
    if (static_cast<int>(alpha.size()) != nvars_)
      throw std::invalid_argument("jet: multi-index length mismatch");
    int total = 0;
    uint64_t key = 0, base = 1;
    for (int i = 0; i < nvars_; ++i) {
      if (alpha[i] < 0) throw std::invalid_argument("jet: negative multi-index entry");
      total += alpha[i];
      key += static_cast<uint64_t>(alpha[i]) * base;
      base *= 5;
    }
    if (total > order_) return -1;
    return index_.at(key);
  }

  // Slot of alpha(slot) + e_var, or -1 past the truncation order.
  int raise(int slot, int var) const { return raise_[static_cast<size_t>(slot) * nvars_ + var]; }

  struct ProdTerm {
    int a, b, out;
  };
  const std::vector<ProdTerm>& products() const { return prod_; }

  JetSpace(const JetSpace&) = delete;
  JetSpace& operator=(const JetSpace&) = delete;

private:
  JetSpace(int nvars, int order) : nvars_(nvars), order_(order) {
    if (nvars < 1 || nvars > kMaxVars) throw std::invalid_argument("jet: unsupported variable count");
    if (order < 0 || order > kMaxOrder) throw std::invalid_argument("jet: unsupported order");
    std::vector<int> alpha(nvars, 0);
    for (int d = 0; d <= order; ++d) emit(alpha, 0, d);
    const int m = size();
    raise_.assign(static_cast<size_t>(m) * nvars_, -1);
    for (int s = 0; s < m; ++s) {
      auto e = exponents(s);
      std::vector<int> up(e.begin(), e.end());
      for (int v = 0; v < nvars_; ++v) {
        if (degree_[s] + 1 <= order_) {
          ++up[v];
          raise_[static_cast<size_t>(s) * nvars_ + v] = slot(up);
          --up[v];
        }
      }
    }
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j) {
        if (degree_[i] + degree_[j] > order_) continue;
        auto ei = exponents(i);
        auto ej = exponents(j);
        std::vector<int> sum(nvars_);
        for (int v = 0; v < nvars_; ++v) sum[v] = ei[v] + ej[v];
        prod_.push_back({i, j, slot(sum)});
      }
  }

  void emit(std::vector<int>& alpha, int pos, int remaining) {
    if (pos == nvars_ - 1) {
      alpha[pos] = remaining;
      record(alpha);
      alpha[pos] = 0;
      return;
    }
    for (int e = remaining; e >= 0; --e) {
      alpha[pos] = e;
      emit(alpha, pos + 1, remaining - e);
    }
    alpha[pos] = 0;
  }

  void record(const std::vector<int>& alpha) {
    uint64_t key = 0, base = 1;
    int total = 0;
    double fact = 1.0;
    for (int i = 0; i < nvars_; ++i) {
      key += static_cast<uint64_t>(alpha[i]) * base;
      base *= 5;
      total += alpha[i];
      for (int k = 2; k <= alpha[i]; ++k) fact *= k;
    }
    index_[key] = size();
    exps_.insert(exps_.end(), alpha.begin(), alpha.end());
    degree_.push_back(total);
    factorial_.push_back(fact);
  }

  int nvars_, order_;
  std::vector<int> exps_;
  std::vector<int> degree_;
  std::vector<double> factorial_;
  std::vector<int> raise_;
  std::vector<ProdTerm> prod_;
  std::map<uint64_t, int> index_;
};

class Jet {
public:
  Jet() = default;
  explicit Jet(const JetSpace& s, double value = 0.0) : space_(&s), c_(s.size(), 0.0) {
    c_[0] = value;
  }

  static Jet variable(const JetSpace& s, int var, double value) {
    Jet j(s, value);
    if (s.order() >= 1) {
      int slot = s.raise(0, var);
      j.c_[slot] = 1.0;
    }
    return j;
  }

  const JetSpace& space() const { return *space_; }
  bool valid() const { return space_ != nullptr; }
  double value() const { return c_[0]; }
  double coeff(int slot) const { return c_[slot]; }
  double& coeff(int slot) { return c_[slot]; }

  // Partial derivative for a multi-index (Taylor coefficient times alpha!).
  double partial(std::span<const int> alpha) const {
    int s = space_->slot(alpha);
    if (s < 0) throw std::invalid_argument("jet: partial order beyond truncation");
    return c_[s] * space_->factorial(s);
  }
  double partial(std::initializer_list<int> alpha) const {
    return partial(std::span<const int>(alpha.begin(), alpha.size()));
  }
  // First derivative with respect to one variable.
  double d1(int var) const { return c_[space_->raise(0, var)]; }

  // Jet of d/dx_var, one order lower.
  Jet derivative(int var) const {
    const JetSpace& lower = JetSpace::get(space_->nvars(), space_->order() - 1);
    Jet out(lower);
    for (int s = 0; s < lower.size(); ++s) {
      int r = space_->raise(s, var);
      out.c_[s] = c_[r] * (space_->exponents(s)[var] + 1);
    }
    return out;
  }

  Jet truncated(int new_order) const {
    if (new_order == space_->order()) return *this;
    const JetSpace& lower = JetSpace::get(space_->nvars(), new_order);
    Jet out(lower);
    for (int s = 0; s < lower.size(); ++s) out.c_[s] = c_[s];
    return out;
  }

  Jet operator-() const {
    Jet out = *this;
    for (double& v : out.c_) v = -v;
    return out;
  }

  Jet& operator+=(const Jet& o) {
    check(o);
    for (size_t i = 0; i < c_.size(); ++i) c_[i] += o.c_[i];
    return *this;
  }
  Jet& operator-=(const Jet& o) {
    check(o);
    for (size_t i = 0; i < c_.size(); ++i) c_[i] -= o.c_[i];
    return *this;
  }
  Jet& operator+=(double v) {
    c_[0] += v;
    return *this;
  }
  Jet& operator-=(double v) {
    c_[0] -= v;
    return *this;
  }
  Jet& operator*=(double v) {
    for (double& x : c_) x *= v;
    return *this;
  }

  friend Jet operator+(Jet a, const Jet& b) { return a += b; }
  friend Jet operator-(Jet a, const Jet& b) { return a -= b; }
  friend Jet operator+(Jet a, double b) { return a += b; }
  friend Jet operator+(double a, Jet b) { return b += a; }
  friend Jet operator-(Jet a, double b) { return a -= b; }
  friend Jet operator-(double a, const Jet& b) { return -b + a; }
  friend Jet operator*(Jet a, double b) { return a *= b; }
  friend Jet operator*(double a, Jet b) { return b *= a; }

  friend Jet operator*(const Jet& a, const Jet& b) {
    a.check(b);
    Jet out(*a.space_);
    for (const auto& t : a.space_->products()) out.c_[t.out] += a.c_[t.a] * b.c_[t.b];
    return out;
  }

  friend Jet operator/(const Jet& a, const Jet& b) { return a * inverse(b); }
  friend Jet operator/(const Jet& a, double b) { return a * (1.0 / b); }
  friend Jet operator/(double a, const Jet& b) { return inverse(b) * a; }

  // sum_m series[m] * (u - u0)^m evaluated by Horner on the nilpotent part.
  friend Jet apply_series(const Jet& u, std::span<const double> series) {
    Jet t = u;
    t.c_[0] = 0.0;
    const int m = u.space_->order();
    Jet acc(*u.space_, series[m]);
    for (int i = m - 1; i >= 0; --i) {
      acc = acc * t;
      acc.c_[0] += series[i];
    }
    return acc;
  }

  friend Jet inverse(const Jet& u) {
    double u0 = u.value();
    if (u0 == 0.0) throw DomainError("division by zero");
    double series[JetSpace::kMaxOrder + 1];
    double p = 1.0 / u0;
    for (int m = 0; m <= u.space_->order(); ++m) {
      series[m] = p;
      p *= -1.0 / u0;
    }
    return apply_series(u, {series, static_cast<size_t>(u.space_->order()) + 1});
  }

  friend Jet log(const Jet& u) {
    double u0 = u.value();
    if (!(u0 > 0.0)) throw DomainError("ln of non-positive argument");
    double series[JetSpace::kMaxOrder + 1];
    series[0] = std::log(u0);
    double p = 1.0 / u0;
    for (int m = 1; m <= u.space_->order(); ++m) {
      series[m] = (m % 2 ? p : -p) / m;
      p /= u0;
    }
    return apply_series(u, {series, static_cast<size_t>(u.space_->order()) + 1});
  }

  friend Jet exp(const Jet& u) {
    double series[JetSpace::kMaxOrder + 1];
    double p = std::exp(u.value());
    for (int m = 0; m <= u.space_->order(); ++m) {
      series[m] = p;
      p /= (m + 1);
    }
    return apply_series(u, {series, static_cast<size_t>(u.space_->order()) + 1});
  }

  // Real power; requires a strictly positive base.
  friend Jet pow(const Jet& u, double p) {
    double u0 = u.value();
    if (!(u0 > 0.0)) throw DomainError("power with non-positive base and non-integer exponent");
    double series[JetSpace::kMaxOrder + 1];
    double binom = 1.0, scale = std::pow(u0, p);
    for (int m = 0; m <= u.space_->order(); ++m) {
      series[m] = binom * scale;
      binom *= (p - m) / (m + 1);
      scale /= u0;
    }
    return apply_series(u, {series, static_cast<size_t>(u.space_->order()) + 1});
  }

  friend Jet sqrt(const Jet& u) { return pow(u, 0.5); }

private:
  void check(const Jet& o) const {
    if (space_ != o.space_) throw std::invalid_argument("jet: mixed spaces in arithmetic");
  }

  const JetSpace* space_ = nullptr;
  std::vector<double> c_;
};

// Integer power by repeated multiplication, sign-domain preserving. Works for
// any scalar with *, /, and a unit; negative exponents go through inversion.
template <class T>
T pow_int(const T& base, long long k, const T& one) {
  if (k == 0) return one;
  bool neg = k < 0;
  unsigned long long e = neg ? static_cast<unsigned long long>(-k) : static_cast<unsigned long long>(k);
  T acc = one, sq = base;
  while (e) {
    if (e & 1ull) acc = acc * sq;
    e >>= 1;
    if (e) sq = sq * sq;
  }
  if (!neg) return acc;
  return one / acc;
}

inline double make_constant(double /*proto*/, double v) { return v; }
inline Jet make_constant(const Jet& proto, double v) { return Jet(proto.space(), v); }

// Taylor composition: f holds coefficients around the point whose components
// are args[i].value(); args express each of f's variables as a jet in the
// output space. Returns the jet of the composite in the output space.
inline Jet compose(const Jet& f, std::span<const Jet> args) {
  const JetSpace& fs = f.space();
  if (static_cast<int>(args.size()) != fs.nvars())
    throw std::invalid_argument("compose: argument count mismatch");
  const JetSpace& os = args[0].space();
  // Nilpotent parts and their powers up to the inner truncation order.
  std::vector<std::vector<Jet>> pows(args.size());
  for (size_t a = 0; a < args.size(); ++a) {
    Jet t = args[a];
    t.coeff(0) = 0.0;
    pows[a].push_back(Jet(os, 1.0));
    for (int e = 1; e <= fs.order(); ++e) pows[a].push_back(pows[a].back() * t);
  }
  Jet out(os, 0.0);
  for (int s = 0; s < fs.size(); ++s) {
    double c = f.coeff(s);
    if (c == 0.0) continue;
    Jet term(os, c);
    auto e = fs.exponents(s);
    for (size_t a = 0; a < args.size(); ++a)
      if (e[a] > 0) term = term * pows[a][e[a]];
    out += term;
  }
  return out;
}

}  // namespace gtd
