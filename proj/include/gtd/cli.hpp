#pragma once

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"

#include "gtd/fieldeq.hpp"
#include "gtd/report_io.hpp"
#include "gtd/rng.hpp"

namespace gtd::cli {

// Exit codes: 0 success, 1 check failure, 2 usage/config error, 3 runtime
// domain error (with partial output flushed).
inline constexpr int kExitOk = 0;
inline constexpr int kExitCheckFailed = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitRuntime = 3;

struct GridAxis {
  std::string name;
  double lo = 0.0, hi = 0.0;
  int count = 0;
};

struct RunConfig {
  std::string config_path;  // optional key=value file, applied before flags

  std::string system = "ideal";

  std::string family = "ginv2";  // ginv2 | gup1 | flat
  int k = -1;
  std::string lambda = "1";
  std::string xi = "delta";  // delta | eta | half
  std::string chi = "delta";
  std::string choice;        // mfo | mso | msot0 shortcut for --family gup1

  std::string grid;  // e.g. "U=0.1:10:20,V=0.1:10:20"

  std::vector<double> E0, v0;
  double tau_max = 5.0;
  double step = 1e-3;
  int rays = 0;
  std::string starts;  // semicolon-separated start points for trace sweeps
  std::string chart = "raw";

  std::string suite = "all";
  uint64_t seed = 0;
  int samples = 20;
  int contact_n = 2;

  std::vector<std::string> params;  // name=value overrides for the system

  std::string output;  // empty = stdout
  std::string format = "csv";
};

inline std::vector<double> parse_number_list_checked(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string piece;
  while (std::getline(ss, piece, ',')) {
    size_t used = 0;
    out.push_back(std::stod(piece, &used));
  }
  return out;
}

// key = value configuration, one pair per line, '#' comments; keys mirror
// the long option names. Values run to the end of the line, so grids and
// expressions need no quoting. Command-line flags override file values.
inline void apply_config_file(RunConfig& cfg, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::string line;
  auto trim = [](std::string s) {
    size_t b = s.find_first_not_of(" \t\r");
    size_t e = s.find_last_not_of(" \t\r");
    return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
  };
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::string t = trim(line);
    if (t.empty()) continue;
    size_t eq = t.find('=');
    if (eq == std::string::npos)
      throw ConfigError(path + ":" + std::to_string(lineno) + ": expected key = value");
    std::string key = trim(t.substr(0, eq));
    std::string value = trim(t.substr(eq + 1));
    if (value.size() >= 2 && (value.front() == '"' || value.front() == '\'') &&
        value.back() == value.front())
      value = value.substr(1, value.size() - 2);
    try {
      if (key == "system") cfg.system = value;
      else if (key == "family") cfg.family = value;
      else if (key == "k") cfg.k = std::stoi(value);
      else if (key == "lambda") cfg.lambda = value;
      else if (key == "xi") cfg.xi = value;
      else if (key == "chi") cfg.chi = value;
      else if (key == "choice") cfg.choice = value;
      else if (key == "grid") cfg.grid = value;
      else if (key == "E0") cfg.E0 = parse_number_list_checked(value);
      else if (key == "v0") cfg.v0 = parse_number_list_checked(value);
      else if (key == "tau-max" || key == "tau_max") cfg.tau_max = std::stod(value);
      else if (key == "step") cfg.step = std::stod(value);
      else if (key == "rays") cfg.rays = std::stoi(value);
      else if (key == "starts") cfg.starts = value;
      else if (key == "chart") cfg.chart = value;
      else if (key == "suite") cfg.suite = value;
      else if (key == "seed") cfg.seed = std::stoull(value);
      else if (key == "samples") cfg.samples = std::stoi(value);
      else if (key == "n") cfg.contact_n = std::stoi(value);
      else if (key == "param") cfg.params.push_back(value);
      else if (key == "output") cfg.output = value;
      else if (key == "format") cfg.format = value;
      else throw ConfigError(path + ":" + std::to_string(lineno) + ": unknown key '" + key + "'");
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception&) {
      throw ConfigError(path + ":" + std::to_string(lineno) + ": bad value for '" + key + "'");
    }
  }
}

inline int thread_budget() {
  unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("GTD_THREADS")) {
    long v = std::strtol(env, nullptr, 10);
    if (v >= 1) hw = std::min<unsigned>(hw, static_cast<unsigned>(v));
  }
  return static_cast<int>(hw);
}

// Index-parallel map with deterministic output slots; GTD_THREADS caps the
// worker count.
template <class F>
void parallel_for(int count, F&& fn) {
  int nt = std::min(thread_budget(), count);
  if (nt <= 1) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(nt);
  for (int t = 0; t < nt; ++t)
    pool.emplace_back([&, t] {
      for (int i = t; i < count; i += nt) fn(i);
    });
  for (auto& th : pool) th.join();
}

inline std::vector<double> parse_number_list(const std::string& text) {
  return parse_number_list_checked(text);
}

inline std::vector<GridAxis> parse_grid(const std::string& text) {
  std::vector<GridAxis> axes;
  std::stringstream ss(text);
  std::string piece;
  while (std::getline(ss, piece, ',')) {
    GridAxis ax;
    size_t eq = piece.find('=');
    if (eq == std::string::npos) throw ConfigError("grid axis needs name=lo:hi:count");
    ax.name = piece.substr(0, eq);
    std::stringstream rs(piece.substr(eq + 1));
    std::string f;
    std::vector<std::string> fields;
    while (std::getline(rs, f, ':')) fields.push_back(f);
    if (fields.size() != 3) throw ConfigError("grid axis needs name=lo:hi:count");
    try {
      ax.lo = std::stod(fields[0]);
      ax.hi = std::stod(fields[1]);
      ax.count = std::stoi(fields[2]);
    } catch (const std::exception&) {
      throw ConfigError("grid axis has a malformed number in '" + piece + "'");
    }
    if (ax.count < 1) throw ConfigError("grid axis count must be >= 1");
    axes.push_back(std::move(ax));
  }
  if (axes.empty()) throw ConfigError("empty grid");
  return axes;
}

inline double grid_value(const GridAxis& ax, int i) {
  if (ax.count == 1) return ax.lo;
  return ax.lo + (ax.hi - ax.lo) * i / (ax.count - 1);
}

// Lambda expressions may reference the phase coordinates by any accepted
// alias; declare the whole superset so undeclared identifiers still fail.
inline Expression parse_phase_expression(const std::string& text, int n) {
  std::vector<std::string> names{"Phi"};
  for (int j = 0; j <= 2 * n; ++j) names.push_back("Z" + std::to_string(j));
  for (int a = 1; a <= n; ++a) names.push_back("E" + std::to_string(a));
  for (int a = 1; a <= n; ++a) names.push_back("I" + std::to_string(a));
  try {
    return Expression::parse(text, names);
  } catch (const ParseError& e) {
    throw ConfigError(std::string("bad conformal factor expression: ") + e.what());
  }
}

inline TensorChoice parse_tensor_choice(const std::string& s) {
  if (s == "delta") return TensorChoice::Delta;
  if (s == "eta") return TensorChoice::Eta;
  if (s == "half" || s == "half-delta-minus-eta") return TensorChoice::HalfDeltaMinusEta;
  throw ConfigError("unknown tensor choice '" + s + "' (delta | eta | half)");
}

inline ThermoSystem make_system(const RunConfig& cfg) {
  ThermoSystem sys = ThermoSystem::resolve(cfg.system);
  for (const std::string& override_ : cfg.params) {
    size_t eq = override_.find('=');
    if (eq == std::string::npos) throw ConfigError("--param expects name=value");
    std::string name = override_.substr(0, eq);
    double value = 0.0;
    try {
      value = std::stod(override_.substr(eq + 1));
    } catch (const std::exception&) {
      throw ConfigError("--param expects name=value with a numeric value");
    }
    sys = sys.with_parameter(name, value);
  }
  return sys;
}

inline MetricSpec make_metric_spec(const RunConfig& cfg, int n) {
  Expression lam = parse_phase_expression(cfg.lambda, n);
  if (!cfg.choice.empty()) {
    MetricSpec s;
    if (cfg.choice == "mfo")
      s = MetricSpec::mfo();
    else if (cfg.choice == "mso")
      s = MetricSpec::mso();
    else if (cfg.choice == "msot0")
      s = MetricSpec::msot0();
    else
      throw ConfigError("unknown metric choice '" + cfg.choice + "' (mfo | mso | msot0)");
    s.lambda = std::move(lam);
    return s;
  }
  if (cfg.family == "ginv2") return MetricSpec::ginv2(cfg.k, std::move(lam));
  if (cfg.family == "gup1") {
    MetricSpec s = MetricSpec::gup1(parse_tensor_choice(cfg.xi), parse_tensor_choice(cfg.chi));
    s.lambda = std::move(lam);
    return s;
  }
  if (cfg.family == "flat") return MetricSpec::flat();
  throw ConfigError("unknown metric family '" + cfg.family + "' (ginv2 | gup1 | flat)");
}

// Maps grid axis names to coordinate slots: extensive names ("U", "V") or
// positional aliases E1..En.
inline std::vector<int> axis_slots(const ThermoSystem& sys, const std::vector<GridAxis>& axes) {
  const int n = sys.dof();
  if (static_cast<int>(axes.size()) != n)
    throw ConfigError("grid must name all " + std::to_string(n) + " coordinates");
  std::vector<int> slots(axes.size(), -1);
  std::vector<bool> taken(n, false);
  for (size_t i = 0; i < axes.size(); ++i) {
    int slot = -1;
    for (int a = 0; a < n; ++a)
      if (axes[i].name == sys.extensive_names()[a] || axes[i].name == "E" + std::to_string(a + 1))
        slot = a;
    if (slot < 0) throw ConfigError("grid axis '" + axes[i].name + "' is not a coordinate");
    if (taken[slot]) throw ConfigError("grid axis '" + axes[i].name + "' repeated");
    taken[slot] = true;
    slots[i] = slot;
  }
  return slots;
}

namespace detail {

class OutputSink {
public:
  explicit OutputSink(const std::string& path) {
    if (!path.empty()) {
      file_.open(path, std::ios::binary);
      if (!file_) throw ConfigError("cannot open output file '" + path + "'");
    }
  }
  std::ostream& stream() { return file_.is_open() ? file_ : std::cout; }
  void flush() { stream().flush(); }

private:
  std::ofstream file_;
};

}  // namespace detail

inline int cmd_curvature(const RunConfig& cfg) {
  ThermoSystem sys = make_system(cfg);
  MetricSpec spec = make_metric_spec(cfg, sys.dof());
  std::vector<GridAxis> axes = parse_grid(cfg.grid);
  std::vector<int> slots = axis_slots(sys, axes);
  const int n = sys.dof();

  long total = 1;
  for (const GridAxis& ax : axes) total *= ax.count;

  struct Cell {
    std::vector<double> E;
    std::optional<CurvatureReport> rep;
    std::string error;
  };
  std::vector<Cell> cells(total);
  parallel_for(static_cast<int>(total), [&](int idx) {
    long rest = idx;
    std::vector<double> E(n, 0.0);
    for (int ax = static_cast<int>(axes.size()) - 1; ax >= 0; --ax) {
      int i = static_cast<int>(rest % axes[ax].count);
      rest /= axes[ax].count;
      E[slots[ax]] = grid_value(axes[ax], i);
    }
    cells[idx].E = E;
    try {
      cells[idx].rep = curvature(sys, spec, cells[idx].E);
    } catch (const std::exception& e) {
      cells[idx].error = e.what();
    }
  });

  detail::OutputSink sink(cfg.output);
  std::ostream& os = sink.stream();
  if (cfg.format == "json") {
    nlohmann::json arr = nlohmann::json::array();
    for (const Cell& c : cells) {
      if (!c.rep) {
        os << arr.dump(2) << '\n';
        sink.flush();
        std::cerr << "curvature: " << c.error << "\n";
        return kExitRuntime;
      }
      nlohmann::json j = to_json(*c.rep);
      j["E"] = c.E;
      arr.push_back(std::move(j));
    }
    os << arr.dump(2) << '\n';
    return kExitOk;
  }
  write_curvature_csv_header(os, n);
  for (const Cell& c : cells) {
    if (!c.rep) {
      sink.flush();
      std::cerr << "curvature: " << c.error << "\n";
      return kExitRuntime;
    }
    write_curvature_csv_row(os, c.E, *c.rep);
  }
  return kExitOk;
}

inline void write_ray_sweep_csv(std::ostream& os, const std::vector<DirectionClass>& rays) {
  os << "theta,v1,v2,tau_end,E1_end,E2_end,S_end,ds_accum,status,admissibility\n";
  for (const DirectionClass& d : rays) {
    os << format_double(d.theta) << ',' << format_double(d.v[0]) << ',' << format_double(d.v[1])
       << ',' << format_double(d.end.tau) << ',' << format_double(d.end.x[0]) << ','
       << format_double(d.end.x[1]) << ',' << format_double(d.end.S) << ','
       << format_double(d.end.length) << ',' << to_string(d.status) << ',' << to_string(d.cls)
       << '\n';
  }
}

inline std::string suffixed_path(const std::string& path, size_t index) {
  size_t dot = path.rfind('.');
  size_t slash = path.find_last_of("/\\");
  if (dot == std::string::npos || (slash != std::string::npos && dot < slash))
    return path + "_" + std::to_string(index);
  return path.substr(0, dot) + "_" + std::to_string(index) + path.substr(dot);
}

inline int cmd_geodesic(const RunConfig& cfg) {
  ThermoSystem sys = make_system(cfg);
  MetricSpec spec = make_metric_spec(cfg, sys.dof());
  Chart chart = Chart::by_name(cfg.chart);
  const int n = sys.dof();

  if (cfg.rays > 0) {
    if (static_cast<int>(cfg.E0.size()) != n) throw ConfigError("--E0 must give all coordinates");
    std::vector<DirectionClass> rays;
    try {
      rays = reachable_region(sys, spec, chart, cfg.E0, cfg.rays, cfg.tau_max, cfg.step);
    } catch (const DomainError& e) {
      std::cerr << "geodesic: " << e.what() << "\n";
      return kExitRuntime;
    }
    detail::OutputSink sink(cfg.output);
    if (cfg.format == "json") {
      nlohmann::json arr = nlohmann::json::array();
      for (const DirectionClass& d : rays) {
        nlohmann::json j;
        j["theta"] = d.theta;
        j["v"] = d.v;
        j["status"] = to_string(d.status);
        j["admissibility"] = to_string(d.cls);
        j["end"] = {{"tau", d.end.tau}, {"E", d.end.x}, {"S", d.end.S}, {"ds_accum", d.end.length}};
        arr.push_back(std::move(j));
      }
      sink.stream() << arr.dump(2) << '\n';
    } else {
      write_ray_sweep_csv(sink.stream(), rays);
    }
    return kExitOk;
  }

  std::vector<std::vector<double>> starts;
  if (!cfg.starts.empty()) {
    std::stringstream ss(cfg.starts);
    std::string piece;
    while (std::getline(ss, piece, ';'))
      if (!piece.empty()) starts.push_back(parse_number_list(piece));
    if (starts.empty()) throw ConfigError("--starts given but empty");
    if (cfg.output.empty()) throw ConfigError("--starts requires --output (one file per start)");
  } else {
    if (static_cast<int>(cfg.E0.size()) != n) throw ConfigError("--E0 must give all coordinates");
    starts.push_back(cfg.E0);
  }
  if (static_cast<int>(cfg.v0.size()) != n) throw ConfigError("--v0 must give all coordinates");
  for (const auto& s : starts)
    if (static_cast<int>(s.size()) != n) throw ConfigError("start point has wrong dimension");

  for (size_t i = 0; i < starts.size(); ++i) {
    GeodesicTrace trace;
    try {
      trace = integrate(sys, spec, chart, starts[i], cfg.v0, cfg.tau_max, cfg.step);
    } catch (const DomainError& e) {
      std::cerr << "geodesic: " << e.what() << "\n";
      return kExitRuntime;
    }
    std::string path = cfg.output;
    if (starts.size() > 1) path = suffixed_path(path, i);
    detail::OutputSink sink(path);
    if (cfg.format == "json")
      sink.stream() << trace_to_json(trace).dump(2) << '\n';
    else
      write_trace_csv(sink.stream(), trace);
  }
  return kExitOk;
}

struct CheckResult {
  std::string name;
  bool pass = false;
  double max_deviation = 0.0;
  double threshold = 0.0;
  std::string note;
};

inline std::vector<PhasePoint> seeded_phase_points(int n, int count, SplitMix64& rng) {
  std::vector<PhasePoint> pts;
  pts.reserve(count);
  for (int i = 0; i < count; ++i) {
    std::vector<double> E, I;
    for (int a = 0; a < n; ++a) E.push_back(rng.uniform(0.5, 2.0));
    for (int a = 0; a < n; ++a) I.push_back(rng.uniform(0.5, 2.0));
    pts.emplace_back(rng.uniform(-1.0, 1.0), std::move(E), std::move(I));
  }
  return pts;
}

// In-domain sample boxes for the built-ins; the vdW box stays clear of the
// singular curve D = 0 and of the V S_V = 0 locus where the k = -1 metric
// factors blow up.
inline std::vector<std::vector<double>> seeded_equilibrium_points(const ThermoSystem& sys, int count,
                                                                  SplitMix64& rng) {
  std::vector<std::vector<double>> pts;
  pts.reserve(count);
  double Ulo = 0.5, Uhi = 3.0, Vlo = 0.5, Vhi = 3.0;
  if (sys.kind() == SystemKind::VanDerWaals) {
    Ulo = 1.0;
    Uhi = 3.0;
    Vlo = 2.5;
    Vhi = 4.0;
  }
  for (int i = 0; i < count; ++i)
    pts.push_back({rng.uniform(Ulo, Uhi), rng.uniform(Vlo, Vhi)});
  return pts;
}

inline int cmd_verify(const RunConfig& cfg) {
  ThermoSystem sys = make_system(cfg);
  const int n = sys.dof();
  MetricSpec spec = make_metric_spec(cfg, n);
  SplitMix64 rng(cfg.seed);
  std::vector<CheckResult> results;

  auto run_suite = [&](const std::string& s) { return cfg.suite == "all" || cfg.suite == s; };

  if (run_suite("invariance")) {
    std::vector<PhasePoint> pts = seeded_phase_points(n, 50, rng);
    auto check = [&](const std::string& name, const MetricSpec& ms, const LegendreIndexSet& idx,
                     bool expect_invariant) {
      CheckResult r;
      r.name = name;
      r.max_deviation = check_metric_invariance(ms, idx, pts);
      r.threshold = expect_invariant ? 1e-10 : 0.1;
      r.pass = expect_invariant ? r.max_deviation < r.threshold : r.max_deviation >= r.threshold;
      if (!expect_invariant) r.note = "negative control: deviation must stay above threshold";
      results.push_back(std::move(r));
    };
    check("phase_invariance/ginv2_total", MetricSpec::ginv2(cfg.k, 1.0), LegendreIndexSet::total(n), true);
    check("phase_invariance/ginv2_partial1", MetricSpec::ginv2(cfg.k, 1.0), LegendreIndexSet::of({0}), true);
    check("phase_invariance/gup1_mfo_total", MetricSpec::mfo(), LegendreIndexSet::total(n), true);
    check("phase_invariance/gup1_mso_total", MetricSpec::mso(), LegendreIndexSet::total(n), true);
    check("phase_invariance/flat_control", MetricSpec::flat(), LegendreIndexSet::total(n), false);

    auto points = seeded_equilibrium_points(sys, cfg.samples, rng);
    auto scalar_check = [&](const std::string& name, const MetricSpec& ms,
                            const LegendreIndexSet& idx) {
      CheckResult r;
      r.name = name;
      r.threshold = 1e-6;
      for (const auto& E : points) {
        double direct = curvature(sys, ms, E).scalar_R;
        double transformed = transformed_scalar_curvature(sys, ms, idx, E);
        double dev = std::abs(direct - transformed) / std::max({1.0, std::abs(direct), std::abs(transformed)});
        r.max_deviation = std::max(r.max_deviation, dev);
      }
      r.pass = r.max_deviation < r.threshold;
      results.push_back(std::move(r));
    };
    MetricSpec ginv2_spec = MetricSpec::ginv2(-1, sys.kind() == SystemKind::IdealGas ? -1.0 : 1.0);
    scalar_check("scalar_R_invariance/ginv2_total", ginv2_spec, LegendreIndexSet::total(n));
    scalar_check("scalar_R_invariance/ginv2_partial1", ginv2_spec, LegendreIndexSet::of({0}));
    scalar_check("scalar_R_invariance/gup1_mfo_total", MetricSpec::mfo(), LegendreIndexSet::total(n));
    scalar_check("scalar_R_invariance/gup1_mso_total", MetricSpec::mso(), LegendreIndexSet::total(n));
  }

  if (run_suite("contact")) {
    CheckResult r;
    r.name = "contact/theta_wedge_dtheta_n";
    double expected = 1.0;
    for (int m = 2; m <= cfg.contact_n; ++m) expected *= m;
    double got = contact_condition(cfg.contact_n);
    r.max_deviation = std::abs(std::abs(got) - expected);
    r.threshold = 1e-12;
    r.pass = r.max_deviation < r.threshold;
    r.note = "coefficient " + format_double(got);
    results.push_back(std::move(r));

    CheckResult r2;
    r2.name = "contact/integrable_control";
    r2.max_deviation = std::abs(contact_condition_integrable_control(cfg.contact_n));
    r2.threshold = 1e-12;
    r2.pass = r2.max_deviation < r2.threshold;
    results.push_back(std::move(r2));
  }

  if (run_suite("pullback")) {
    CheckResult r;
    r.name = "pullback/jacobian_vs_closed_form";
    r.threshold = 1e-10;
    auto points = seeded_equilibrium_points(sys, cfg.samples, rng);
    try {
      for (const auto& E : points)
        r.max_deviation = std::max(r.max_deviation, pullback_consistency(sys, spec, E));
      r.pass = r.max_deviation < r.threshold;
    } catch (const DomainError& e) {
      r.pass = false;
      r.note = e.what();
    }
    results.push_back(std::move(r));
  }

  if (run_suite("fieldeq")) {
    if (sys.kind() != SystemKind::IdealGas) {
      if (cfg.suite == "fieldeq") throw ConfigError("fieldeq suite requires --system ideal");
    } else {
      LambdaAnsatz ansatz{spec.lambda, cfg.k};
      double kappa = sys.parameter("kappa");
      CheckResult r;
      r.name = "fieldeq/ideal_gas_conditions";
      r.threshold = 1e-10;
      for (int i = 0; i < 10; ++i)
        for (int j = 0; j < 10; ++j) {
          double U = 0.5 + 0.3 * i, V = 0.5 + 0.3 * j;
          auto c = ideal_gas_conditions(ansatz, U, V, kappa);
          r.max_deviation = std::max({r.max_deviation, std::abs(c[0]), std::abs(c[1])});
        }
      r.pass = r.max_deviation < r.threshold;
      if (!r.pass) {
        auto c = ideal_gas_conditions(ansatz, 1.0, 1.0, kappa);
        std::vector<double> res = harmonic_residual(sys, MetricSpec::ginv2(cfg.k, spec.lambda),
                                                    std::array{1.0, 1.0});
        nlohmann::json rr = residual_report(res);
        r.note = "conditions at (1,1): (" + format_double(c[0]) + ", " + format_double(c[1]) +
                 "); harmonic residual " + rr.dump();
      }
      results.push_back(std::move(r));
    }
  }

  bool all_pass = true;
  nlohmann::json checks = nlohmann::json::array();
  for (const CheckResult& r : results) {
    all_pass = all_pass && r.pass;
    nlohmann::json j;
    j["name"] = r.name;
    j["pass"] = r.pass;
    j["max_deviation"] = r.max_deviation;
    j["threshold"] = r.threshold;
    if (!r.note.empty()) j["note"] = r.note;
    checks.push_back(std::move(j));
  }
  nlohmann::json report;
  report["suite"] = cfg.suite;
  report["system"] = sys.name();
  report["seed"] = cfg.seed;
  report["checks"] = std::move(checks);
  report["pass"] = all_pass;

  detail::OutputSink sink(cfg.output);
  sink.stream() << report.dump(2) << '\n';
  return all_pass ? kExitOk : kExitCheckFailed;
}

inline void add_common_options(CLI::App* cmd, RunConfig& cfg) {
  cmd->add_option("--system", cfg.system, "built-in name (ideal | vdw) or a definition file path");
  cmd->add_option("--param", cfg.params, "system parameter override, name=value (repeatable)");
  cmd->add_option("--family", cfg.family, "metric family: ginv2 | gup1 | flat");
  cmd->add_option("--k", cfg.k, "integer k of the ginv2 family");
  cmd->add_option("--lambda", cfg.lambda, "conformal factor expression in the phase coordinates");
  cmd->add_option("--xi", cfg.xi, "gup1 xi tensor: delta | eta | half");
  cmd->add_option("--chi", cfg.chi, "gup1 chi tensor: delta | eta | half");
  cmd->add_option("--choice", cfg.choice, "gup1 shortcut: mfo | mso | msot0");
  cmd->add_option("--output", cfg.output, "output path (default stdout)");
  cmd->add_option("--format", cfg.format, "csv | json");
  cmd->add_option("--config", cfg.config_path,
                  "key=value config file mirroring the long options (flags override)");
}

inline int run(int argc, const char* const* argv) {
  CLI::App app{"geometrothermodynamics engine: Legendre-invariant metrics, curvature and geodesics "
               "of thermodynamic systems"};
  app.require_subcommand(1);

  RunConfig ccfg, gcfg, vcfg;

  CLI::App* cur = app.add_subcommand("curvature", "grid scan of the equilibrium-manifold curvature");
  add_common_options(cur, ccfg);
  cur->add_option("--grid", ccfg.grid, "axes as name=lo:hi:count, e.g. U=0.1:10:20,V=0.1:10:20");

  CLI::App* geo = app.add_subcommand("geodesic", "integrate geodesics of the thermodynamic metric");
  add_common_options(geo, gcfg);
  geo->add_option("--E0", [&gcfg](const std::vector<std::string>& vals) {
        gcfg.E0 = parse_number_list(vals.back());
        return true;
      }, "start point, comma separated");
  geo->add_option("--v0", [&gcfg](const std::vector<std::string>& vals) {
        gcfg.v0 = parse_number_list(vals.back());
        return true;
      }, "initial velocity, comma separated");
  geo->add_option("--tau-max", gcfg.tau_max, "affine-parameter horizon");
  geo->add_option("--step", gcfg.step, "RK4 step size");
  geo->add_option("--chart", gcfg.chart, "integration chart: raw | log");
  geo->add_option("--rays", gcfg.rays, "ray sweep: this many directions from --E0");
  geo->add_option("--starts", gcfg.starts, "semicolon-separated start points (one trace file each)");

  CLI::App* ver = app.add_subcommand("verify", "run the built-in verification suites");
  add_common_options(ver, vcfg);
  ver->add_option("--suite", vcfg.suite, "invariance | contact | pullback | fieldeq | all");
  ver->add_option("--seed", vcfg.seed, "seed for the SplitMix64 sample generator");
  ver->add_option("--samples", vcfg.samples, "sample points per check");
  ver->add_option("--n", vcfg.contact_n, "degrees of freedom for the contact check");

  // Config files provide defaults; flags parsed afterwards override them.
  try {
    for (int i = 1; i < argc; ++i) {
      std::string arg = argv[i];
      std::string path;
      if (arg == "--config" && i + 1 < argc)
        path = argv[i + 1];
      else if (arg.rfind("--config=", 0) == 0)
        path = arg.substr(9);
      if (!path.empty()) {
        apply_config_file(ccfg, path);
        apply_config_file(gcfg, path);
        apply_config_file(vcfg, path);
      }
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (cur->parsed()) return cmd_curvature(ccfg);
    if (geo->parsed()) return cmd_geodesic(gcfg);
    if (ver->parsed()) return cmd_verify(vcfg);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const ParseError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const DomainError& e) {
    std::cerr << "domain error: " << e.what() << "\n";
    return kExitRuntime;
  } catch (const DegenerateMetricError& e) {
    std::cerr << "domain error: " << e.what() << "\n";
    return kExitRuntime;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitConfig;
}

}  // namespace gtd::cli
