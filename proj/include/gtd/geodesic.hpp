#pragma once

#include <cmath>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "gtd/equilibrium.hpp"

namespace gtd {

// Quasi-static processes are curves of equilibrium states; the geodesics of
// the thermodynamic metric represent them. Integration is fixed-step RK4 on
// (x, v) with exact Christoffel symbols per stage; termination events
// (metric degeneracy, vdW phase-transition indicator, domain boundary) are
// localized by bisection on the step fraction, so endpoints are stable far
// below the base step size.

enum class TraceStatus { Completed, SingularityHit, DomainExit, StepUnderflow };

inline const char* to_string(TraceStatus s) {
  switch (s) {
    case TraceStatus::Completed: return "completed";
    case TraceStatus::SingularityHit: return "singularity_hit";
    case TraceStatus::DomainExit: return "domain_exit";
    case TraceStatus::StepUnderflow: return "step_underflow";
  }
  return "?";
}

struct GeodesicSample {
  double tau = 0.0;
  std::vector<double> x;  // chart coordinates
  std::vector<double> v;  // dx/dtau
  double S = 0.0;         // potential value (entropy for the built-ins)
  double length = 0.0;    // accumulated thermodynamic length
};

struct GeodesicTrace {
  std::vector<GeodesicSample> samples;
  TraceStatus status = TraceStatus::Completed;
  double length = 0.0;
  Chart chart;
};

struct IntegrateOptions {
  double det_rel_tol = 1e-12;  // |det g| threshold relative to row scale
  double d_rel_tol = 1e-3;     // vdW: |D| threshold relative to |D(start)|
  int retain_stride = 1;       // keep every k-th sample (finals always kept)
};

// Metric, inverse, determinant and Christoffel symbols at one chart point.
struct ChartFrame {
  Matd g, g_inv;
  double det = 0.0;
  Tensor3 gamma;
};

inline ChartFrame chart_frame(const ThermoSystem& sys, const MetricSpec& spec, const Chart& chart,
                              std::span<const double> x) {
  const int n = sys.dof();
  Mat<Jet> gj = chart_metric_jets(sys, spec, chart, x, 1);
  ChartFrame f;
  f.g = mat_zeros(n, n);
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) f.g(a, b) = gj(a, b).value();
  if (!invert(f.g, f.g_inv, f.det, 0.0, 1.0))
    throw DegenerateMetricError("metric degenerate along geodesic");
  f.gamma = Tensor3(n);
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      for (int c = b; c < n; ++c) {
        double sum = 0.0;
        for (int d = 0; d < n; ++d)
          sum += f.g_inv(a, d) * (gj(d, b).d1(c) + gj(c, d).d1(b) - gj(b, c).d1(d));
        f.gamma(a, b, c) = 0.5 * sum;
        f.gamma(a, c, b) = f.gamma(a, b, c);
      }
  return f;
}

inline double metric_speed_sq(const ChartFrame& f, std::span<const double> v) {
  double s = 0.0;
  for (int a = 0; a < f.g.rows; ++a)
    for (int b = 0; b < f.g.cols; ++b) s += f.g(a, b) * v[a] * v[b];
  return s;
}

namespace detail {

struct GeoState {
  std::vector<double> x, v;
};

enum class TrialOutcome { Ok, Singular, Invalid };

struct Trial {
  TrialOutcome outcome = TrialOutcome::Invalid;
  bool has_state = false;
  GeoState s;
  ChartFrame end_frame;  // frame at s.x when has_state
  double end_D = 0.0;    // vdW indicator at s.x when has_state
};

class GeodesicIntegrator {
public:
  GeodesicIntegrator(const ThermoSystem& sys, const MetricSpec& spec, const Chart& chart,
                     const IntegrateOptions& opts)
      : sys_(sys), spec_(spec), chart_(chart), opts_(opts), vdw_(sys.kind() == SystemKind::VanDerWaals) {}

  GeodesicTrace run(std::span<const double> x0, std::span<const double> v0, double tau_max,
                    double step) {
    const int n = sys_.dof();
    if (static_cast<int>(x0.size()) != n || static_cast<int>(v0.size()) != n)
      throw std::invalid_argument("integrate: dimension mismatch");
    if (!(step > 0.0)) throw std::invalid_argument("integrate: step must be positive");

    GeodesicTrace trace;
    trace.chart = chart_;
    GeoState cur{{x0.begin(), x0.end()}, {v0.begin(), v0.end()}};
    ChartFrame cur_frame = chart_frame(sys_, spec_, chart_, cur.x);  // throws on bad start
    double cur_D = 0.0;
    if (vdw_) {
      cur_D = vdw_singularity_indicator(sys_, chart_.to_E(cur.x));
      d_threshold_ = opts_.d_rel_tol * std::abs(cur_D);
    }

    double tau = 0.0, length = 0.0;
    long step_index = 0;
    trace.samples.push_back(make_sample(tau, cur, length));
    trace.status = TraceStatus::Completed;

    while (tau < tau_max - 1e-15 * std::max(1.0, tau_max)) {
      double h = std::min(step, tau_max - tau);
      Trial t = attempt(cur, cur_frame, cur_D, h);
      if (t.outcome == TrialOutcome::Ok) {
        length += std::sqrt(std::abs(metric_speed_sq(cur_frame, cur.v))) * h;
        tau += h;
        cur = t.s;
        cur_frame = t.end_frame;
        cur_D = t.end_D;
        ++step_index;
        bool final_step = !(tau < tau_max - 1e-15 * std::max(1.0, tau_max));
        if (final_step || step_index % opts_.retain_stride == 0)
          trace.samples.push_back(make_sample(tau, cur, length));
        continue;
      }

      // Event inside this step: bisect the step fraction to the first
      // trigger point.
      double lo = 0.0, hi = h;
      Trial at_hi = t;
      Trial at_lo;
      at_lo.outcome = TrialOutcome::Ok;
      for (int it = 0; it < 200; ++it) {
        double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        Trial tm = attempt(cur, cur_frame, cur_D, mid);
        if (tm.outcome == TrialOutcome::Ok) {
          lo = mid;
          at_lo = tm;
        } else {
          hi = mid;
          at_hi = tm;
        }
      }

      if (at_hi.outcome == TrialOutcome::Singular && at_hi.has_state) {
        length += std::sqrt(std::abs(metric_speed_sq(cur_frame, cur.v))) * hi;
        trace.samples.push_back(make_sample(tau + hi, at_hi.s, length));
        trace.status = TraceStatus::SingularityHit;
      } else if (lo > 0.0 && at_lo.has_state) {
        length += std::sqrt(std::abs(metric_speed_sq(cur_frame, cur.v))) * lo;
        trace.samples.push_back(make_sample(tau + lo, at_lo.s, length));
        trace.status = at_hi.outcome == TrialOutcome::Singular ? TraceStatus::SingularityHit
                                                               : TraceStatus::DomainExit;
      } else {
        trace.status = at_hi.outcome == TrialOutcome::Invalid ? TraceStatus::StepUnderflow
                                                              : TraceStatus::SingularityHit;
      }
      trace.length = length;
      return trace;
    }
    trace.length = length;
    return trace;
  }

private:
  GeodesicSample make_sample(double tau, const GeoState& s, double length) const {
    GeodesicSample out;
    out.tau = tau;
    out.x = s.x;
    out.v = s.v;
    out.S = sys_.potential_value(chart_.to_E(s.x));
    out.length = length;
    return out;
  }

  void accel(const ChartFrame& f, std::span<const double> v, std::vector<double>& a) const {
    const int n = static_cast<int>(v.size());
    a.assign(n, 0.0);
    for (int i = 0; i < n; ++i) {
      double s = 0.0;
      for (int b = 0; b < n; ++b)
        for (int c = 0; c < n; ++c) s += f.gamma(i, b, c) * v[b] * v[c];
      a[i] = -s;
    }
  }

  Trial attempt(const GeoState& from, const ChartFrame& from_frame, double from_D, double h) const {
    const int n = static_cast<int>(from.x.size());
    Trial out;
    std::vector<double> k1x(n), k1v, k2x(n), k2v, k3x(n), k3v, k4x(n), k4v;
    std::vector<double> xt(n), vt(n);
    try {
      k1x = from.v;
      accel(from_frame, from.v, k1v);
      for (int i = 0; i < n; ++i) {
        xt[i] = from.x[i] + 0.5 * h * k1x[i];
        vt[i] = from.v[i] + 0.5 * h * k1v[i];
      }
      ChartFrame f2 = chart_frame(sys_, spec_, chart_, xt);
      k2x = vt;
      accel(f2, vt, k2v);
      for (int i = 0; i < n; ++i) {
        xt[i] = from.x[i] + 0.5 * h * k2x[i];
        vt[i] = from.v[i] + 0.5 * h * k2v[i];
      }
      ChartFrame f3 = chart_frame(sys_, spec_, chart_, xt);
      k3x = vt;
      accel(f3, vt, k3v);
      for (int i = 0; i < n; ++i) {
        xt[i] = from.x[i] + h * k3x[i];
        vt[i] = from.v[i] + h * k3v[i];
      }
      ChartFrame f4 = chart_frame(sys_, spec_, chart_, xt);
      k4x = vt;
      accel(f4, vt, k4v);

      out.s.x.resize(n);
      out.s.v.resize(n);
      for (int i = 0; i < n; ++i) {
        out.s.x[i] = from.x[i] + h / 6.0 * (k1x[i] + 2.0 * (k2x[i] + k3x[i]) + k4x[i]);
        out.s.v[i] = from.v[i] + h / 6.0 * (k1v[i] + 2.0 * (k2v[i] + k3v[i]) + k4v[i]);
      }
      out.end_frame = chart_frame(sys_, spec_, chart_, out.s.x);
      out.has_state = true;
    } catch (const DegenerateMetricError&) {
      out.outcome = TrialOutcome::Singular;
      out.has_state = false;
      return out;
    } catch (const DomainError&) {
      out.outcome = TrialOutcome::Invalid;
      return out;
    }

    // Post-step event checks at the accepted point. Sign changes of det g or
    // of the vdW indicator mean the step jumped across a degeneracy; the
    // bisection then walks back to the first point inside the threshold band.
    if (std::abs(out.end_frame.det) <= opts_.det_rel_tol * hadamard_scale(out.end_frame.g) ||
        (out.end_frame.det < 0.0) != (from_frame.det < 0.0)) {
      out.outcome = TrialOutcome::Singular;
      return out;
    }
    if (vdw_) {
      try {
        out.end_D = vdw_singularity_indicator(sys_, chart_.to_E(out.s.x));
      } catch (const DomainError&) {
        out.outcome = TrialOutcome::Invalid;
        return out;
      }
      if (std::abs(out.end_D) < d_threshold_ || (out.end_D < 0.0) != (from_D < 0.0)) {
        out.outcome = TrialOutcome::Singular;
        return out;
      }
    }
    out.outcome = TrialOutcome::Ok;
    return out;
  }

  const ThermoSystem& sys_;
  const MetricSpec& spec_;
  const Chart& chart_;
  IntegrateOptions opts_;
  bool vdw_;
  double d_threshold_ = 0.0;
};

}  // namespace detail

inline GeodesicTrace integrate(const ThermoSystem& sys, const MetricSpec& spec, const Chart& chart,
                               std::span<const double> x0, std::span<const double> v0,
                               double tau_max, double step, const IntegrateOptions& opts = {}) {
  detail::GeodesicIntegrator gi(sys, spec, chart, opts);
  return gi.run(x0, v0, tau_max, step);
}

enum class Admissibility { Admissible, Inadmissible, Mixed };

inline const char* to_string(Admissibility a) {
  switch (a) {
    case Admissibility::Admissible: return "admissible";
    case Admissibility::Inadmissible: return "inadmissible";
    case Admissibility::Mixed: return "mixed";
  }
  return "?";
}

// Second-law check: the potential must not decrease along the trace. The
// -1e-10 per-step tolerance keeps constant-entropy boundary geodesics from
// flagging on roundoff.
inline Admissibility admissibility(const GeodesicTrace& trace) {
  const auto& s = trace.samples;
  if (s.size() < 2) throw std::invalid_argument("admissibility: trace needs at least 2 samples");
  size_t ok_steps = 0;
  while (ok_steps + 1 < s.size() && s[ok_steps + 1].S >= s[ok_steps].S - 1e-10) ++ok_steps;
  if (ok_steps == s.size() - 1) return Admissibility::Admissible;
  if (ok_steps == 0) return Admissibility::Inadmissible;
  return Admissibility::Mixed;
}

struct DirectionClass {
  double theta = 0.0;
  std::vector<double> v;
  Admissibility cls = Admissibility::Admissible;
  TraceStatus status = TraceStatus::Completed;
  GeodesicSample end;
};

// Classifies the geodesics emanating from one point, one per direction of a
// uniform angular grid. For the ideal gas in the log chart the admissible set
// is the half-plane (3 kappa/2) v_xi + kappa v_eta >= 0.
inline std::vector<DirectionClass> reachable_region(const ThermoSystem& sys, const MetricSpec& spec,
                                                    const Chart& chart, std::span<const double> x0,
                                                    int directions, double tau_max, double step,
                                                    const IntegrateOptions& opts = {}) {
  if (sys.dof() != 2)
    throw std::invalid_argument("reachable_region: requires two degrees of freedom");
  std::vector<DirectionClass> out;
  out.reserve(directions);
  for (int i = 0; i < directions; ++i) {
    double theta = 2.0 * M_PI * i / directions;
    std::vector<double> v{std::cos(theta), std::sin(theta)};
    GeodesicTrace t = integrate(sys, spec, chart, x0, v, tau_max, step, opts);
    DirectionClass d;
    d.theta = theta;
    d.v = v;
    d.status = t.status;
    d.cls = admissibility(t);
    d.end = t.samples.back();
    out.push_back(std::move(d));
  }
  return out;
}

// Residual of the geodesic equation reconstructed from the trace itself:
// central second difference of x against -Gamma v v at retained samples with
// uniform spacing. Completed traces should stay below 1e-6.
inline double max_geodesic_residual(const ThermoSystem& sys, const MetricSpec& spec,
                                    const GeodesicTrace& trace) {
  const auto& s = trace.samples;
  double worst = 0.0;
  for (size_t i = 1; i + 1 < s.size(); ++i) {
    double dt1 = s[i].tau - s[i - 1].tau;
    double dt2 = s[i + 1].tau - s[i].tau;
    if (std::abs(dt1 - dt2) > 1e-12 * std::max(dt1, dt2)) continue;
    ChartFrame f = chart_frame(sys, spec, trace.chart, s[i].x);
    double norm2 = 0.0;
    for (size_t a = 0; a < s[i].x.size(); ++a) {
      double acc = (s[i + 1].x[a] - 2.0 * s[i].x[a] + s[i - 1].x[a]) / (dt1 * dt2);
      double gvv = 0.0;
      for (size_t b = 0; b < s[i].v.size(); ++b)
        for (size_t c = 0; c < s[i].v.size(); ++c)
          gvv += f.gamma(static_cast<int>(a), static_cast<int>(b), static_cast<int>(c)) *
                 s[i].v[b] * s[i].v[c];
      double r = acc + gvv;
      norm2 += r * r;
    }
    worst = std::max(worst, std::sqrt(norm2));
  }
  return worst;
}

inline void write_trace_csv(std::ostream& os, const GeodesicTrace& trace) {
  const int n = trace.samples.empty() ? 2 : static_cast<int>(trace.samples.front().x.size());
  os << "tau";
  for (int a = 1; a <= n; ++a) os << ",E" << a;
  for (int a = 1; a <= n; ++a) os << ",v" << a;
  os << ",S,ds_accum,status_final_row_only\n";
  for (size_t i = 0; i < trace.samples.size(); ++i) {
    const GeodesicSample& smp = trace.samples[i];
    os << format_double(smp.tau);
    for (double x : smp.x) os << ',' << format_double(x);
    for (double v : smp.v) os << ',' << format_double(v);
    os << ',' << format_double(smp.S) << ',' << format_double(smp.length) << ',';
    if (i + 1 == trace.samples.size()) os << to_string(trace.status);
    os << '\n';
  }
}

}  // namespace gtd
