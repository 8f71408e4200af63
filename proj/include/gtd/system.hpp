#pragma once

#include <fstream>
#include <map>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "gtd/expr.hpp"

namespace gtd {

// A thermodynamic system is a fundamental equation Phi(E^1..E^n) in some
// potential (entropy for both built-ins) with named parameters. Everything
// else — equations of state, metrics, curvature — follows by differentiation.

enum class SystemKind { IdealGas, VanDerWaals, Custom };

class ThermoSystem {
public:
  static ThermoSystem ideal(double kappa = 1.0) {
    ThermoSystem s;
    s.kind_ = SystemKind::IdealGas;
    s.name_ = "ideal";
    s.potential_name_ = "S";
    s.extensive_names_ = {"U", "V"};
    s.param_names_ = {"kappa"};
    s.param_values_ = {kappa};
    s.fundamental_ = Expression::parse("(3/2)*kappa*ln(U) + kappa*ln(V)", s.extensive_names_,
                                       s.param_names_);
    return s;
  }

  static ThermoSystem vdw(double kappa = 1.0, double a = 1.0, double b = 0.1) {
    ThermoSystem s;
    s.kind_ = SystemKind::VanDerWaals;
    s.name_ = "vdw";
    s.potential_name_ = "S";
    s.extensive_names_ = {"U", "V"};
    s.param_names_ = {"kappa", "a", "b"};
    s.param_values_ = {kappa, a, b};
    s.fundamental_ = Expression::parse("(3/2)*kappa*ln(U + a/V) + kappa*ln(V - b)",
                                       s.extensive_names_, s.param_names_);
    return s;
  }

  static ThermoSystem custom(std::string name, std::vector<std::string> variables,
                             std::string potential_name, std::string_view equation,
                             std::vector<std::string> param_names = {},
                             std::vector<double> param_values = {}) {
    ThermoSystem s;
    s.kind_ = SystemKind::Custom;
    s.name_ = std::move(name);
    s.potential_name_ = std::move(potential_name);
    s.extensive_names_ = std::move(variables);
    s.param_names_ = std::move(param_names);
    s.param_values_ = std::move(param_values);
    s.fundamental_ = Expression::parse(equation, s.extensive_names_, s.param_names_);
    return s;
  }

  static ThermoSystem by_name(std::string_view name) {
    if (name == "ideal") return ideal();
    if (name == "vdw") return vdw();
    throw ConfigError("unknown built-in system '" + std::string(name) + "'");
  }

  // System definition file: `key = value` statements separated by ';', plus a
  // `params:` statement with comma-separated assignments. '#' starts a
  // comment. Example:
  //   name = vdw ; variables = U, V ; potential = S ;
  //   params: kappa = 1.0, a = 1.0, b = 0.1 ;
  //   equation = (3/2)*kappa*ln(U + a/V) + kappa*ln(V - b)
  static ThermoSystem from_definition(std::string_view text) {
    std::string cleaned;
    for (size_t i = 0; i < text.size(); ++i) {
      if (text[i] == '#') {
        while (i < text.size() && text[i] != '\n') ++i;
        if (i < text.size()) cleaned += '\n';
        continue;
      }
      cleaned += text[i];
    }
    std::string name, potential = "S", equation;
    std::vector<std::string> variables, param_names;
    std::vector<double> param_values;
    size_t start = 0;
    while (start <= cleaned.size()) {
      size_t end = cleaned.find(';', start);
      std::string stmt = cleaned.substr(start, end == std::string::npos ? std::string::npos : end - start);
      start = end == std::string::npos ? cleaned.size() + 1 : end + 1;
      std::string t = trim(stmt);
      if (t.empty()) continue;
      if (t.rfind("params", 0) == 0) {
        size_t colon = t.find(':');
        if (colon == std::string::npos) throw ConfigError("system file: expected ':' after 'params'");
        for (const std::string& piece : split(t.substr(colon + 1), ',')) {
          auto [key, value] = key_value(piece);
          param_names.push_back(key);
          param_values.push_back(parse_number(value));
        }
        continue;
      }
      auto [key, value] = key_value(t);
      if (key == "name") {
        name = value;
      } else if (key == "variables") {
        for (const std::string& v : split(value, ',')) variables.push_back(trim(v));
      } else if (key == "potential") {
        potential = value;
      } else if (key == "equation") {
        equation = value;
      } else {
        throw ConfigError("system file: unknown key '" + key + "'");
      }
    }
    if (variables.empty()) throw ConfigError("system file: missing 'variables'");
    if (equation.empty()) throw ConfigError("system file: missing 'equation'");
    if (name.empty()) name = "custom";
    return custom(std::move(name), std::move(variables), std::move(potential), equation,
                  std::move(param_names), std::move(param_values));
  }

  static ThermoSystem from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open system file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return from_definition(ss.str());
  }

  // Built-in name, or a file path to a definition file.
  static ThermoSystem resolve(const std::string& name_or_path) {
    if (name_or_path == "ideal" || name_or_path == "vdw") return by_name(name_or_path);
    return from_file(name_or_path);
  }

  SystemKind kind() const { return kind_; }
  const std::string& name() const { return name_; }
  const std::string& potential_name() const { return potential_name_; }
  const std::vector<std::string>& extensive_names() const { return extensive_names_; }
  int dof() const { return static_cast<int>(extensive_names_.size()); }
  const Expression& fundamental() const { return fundamental_; }
  const std::vector<std::string>& parameter_names() const { return param_names_; }
  std::span<const double> parameter_values() const { return param_values_; }

  double parameter(std::string_view name) const {
    for (size_t i = 0; i < param_names_.size(); ++i)
      if (param_names_[i] == name) return param_values_[i];
    throw ConfigError("system '" + name_ + "' has no parameter '" + std::string(name) + "'");
  }

  ThermoSystem with_parameter(std::string_view name, double value) const {
    ThermoSystem s = *this;
    for (size_t i = 0; i < s.param_names_.size(); ++i)
      if (s.param_names_[i] == name) {
        s.param_values_[i] = value;
        return s;
      }
    throw ConfigError("system '" + name_ + "' has no parameter '" + std::string(name) + "'");
  }

  double potential_value(std::span<const double> E) const {
    return fundamental_.evaluate_value(E, param_values_);
  }

  Jet potential_jet(std::span<const double> E, int order) const {
    const JetSpace& space = JetSpace::get(dof(), order);
    std::vector<Jet> vars;
    vars.reserve(E.size());
    for (size_t i = 0; i < E.size(); ++i)
      vars.push_back(Jet::variable(space, static_cast<int>(i), E[i]));
    return fundamental_.evaluate_scalar<Jet>(vars, param_values_, Jet(space));
  }

  DerivativeBundle derivatives(std::span<const double> E, int order = 4) const {
    return fundamental_.evaluate(E, param_values_, order);
  }

  bool in_domain(std::span<const double> E) const {
    try {
      double v = potential_value(E);
      return std::isfinite(v);
    } catch (const DomainError&) {
      return false;
    }
  }

private:
  static std::string trim(std::string_view s) {
    size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
  }

  static std::vector<std::string> split(std::string_view s, char sep) {
    std::vector<std::string> out;
    size_t start = 0;
    while (start <= s.size()) {
      size_t end = s.find(sep, start);
      if (end == std::string_view::npos) {
        out.push_back(std::string(s.substr(start)));
        break;
      }
      out.push_back(std::string(s.substr(start, end - start)));
      start = end + 1;
    }
    return out;
  }

  static std::pair<std::string, std::string> key_value(std::string_view stmt) {
    size_t eq = stmt.find('=');
    if (eq == std::string_view::npos)
      throw ConfigError("system file: expected 'key = value' in '" + std::string(stmt) + "'");
    return {trim(stmt.substr(0, eq)), trim(stmt.substr(eq + 1))};
  }

  static double parse_number(const std::string& s) {
    size_t used = 0;
    double v = std::stod(s, &used);
    if (used != s.size()) throw ConfigError("system file: bad number '" + s + "'");
    return v;
  }

  SystemKind kind_ = SystemKind::Custom;
  std::string name_, potential_name_;
  std::vector<std::string> extensive_names_;
  std::vector<std::string> param_names_;
  std::vector<double> param_values_;
  Expression fundamental_;
};

// Equilibrium-manifold point with the potential's derivatives cached to the
// order curvature needs.
struct EquilibriumPoint {
  std::vector<double> E;
  DerivativeBundle derivs;
};

inline EquilibriumPoint equilibrium_point(const ThermoSystem& sys, std::span<const double> E,
                                          int order = 4) {
  return {std::vector<double>(E.begin(), E.end()), sys.derivatives(E, order)};
}

struct StateVariables {
  double T = 0, P = 0, S = 0, U = 0, V = 0;
};

// Entropy-representation equations of state: 1/T = dS/dU, P/T = dS/dV.
inline StateVariables equations_of_state(const ThermoSystem& sys, std::span<const double> E) {
  if (sys.dof() != 2)
    throw std::invalid_argument("equations_of_state: system must have two degrees of freedom");
  DerivativeBundle d = sys.derivatives(E, 1);
  double S_U = d.partial({1, 0});
  double S_V = d.partial({0, 1});
  if (!(S_U > 0.0))
    throw DomainError("unphysical temperature: dS/dU <= 0 at the requested point");
  StateVariables sv;
  sv.U = E[0];
  sv.V = E[1];
  sv.S = d.value();
  sv.T = 1.0 / S_U;
  sv.P = sv.T * S_V;
  return sv;
}

inline StateVariables equations_of_state(const ThermoSystem& sys, const EquilibriumPoint& p) {
  return equations_of_state(sys, p.E);
}

// D = P V^3 - a V + 2 a b; its zeros locate the van der Waals first-order
// phase transitions and the curvature singularities.
inline double vdw_singularity_indicator(const ThermoSystem& sys, std::span<const double> E) {
  if (sys.kind() != SystemKind::VanDerWaals)
    throw std::invalid_argument("vdw_singularity_indicator: not a van der Waals system");
  StateVariables sv = equations_of_state(sys, E);
  double a = sys.parameter("a"), b = sys.parameter("b");
  double V = E[1];
  return sv.P * V * V * V - a * V + 2.0 * a * b;
}

inline double vdw_singularity_indicator(const ThermoSystem& sys, const EquilibriumPoint& p) {
  return vdw_singularity_indicator(sys, p.E);
}

}  // namespace gtd
