#pragma once

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "gtd/errors.hpp"
#include "gtd/jet.hpp"

namespace gtd {

// Coordinate charts on the equilibrium manifold. The log chart is the
// componentwise map E^a = exp(x^a); it turns the flat ideal-gas metric into
// the Euclidean plane, where geodesics are straight lines.
struct Chart {
  enum class Kind { Raw, Log };
  Kind kind = Kind::Raw;

  static Chart raw() { return {Kind::Raw}; }
  static Chart log_chart() { return {Kind::Log}; }

  static Chart by_name(std::string_view name) {
    if (name == "raw") return raw();
    if (name == "log") return log_chart();
    throw ConfigError("unknown chart '" + std::string(name) + "' (expected raw or log)");
  }

  const char* name() const { return kind == Kind::Raw ? "raw" : "log"; }

  std::vector<double> to_E(std::span<const double> x) const {
    std::vector<double> E(x.begin(), x.end());
    if (kind == Kind::Log)
      for (double& v : E) v = std::exp(v);
    return E;
  }

  std::vector<double> from_E(std::span<const double> E) const {
    std::vector<double> x(E.begin(), E.end());
    if (kind == Kind::Log)
      for (double& v : x) {
        if (!(v > 0.0)) throw DomainError("log chart requires positive coordinates");
        v = std::log(v);
      }
    return x;
  }

  // E^a as jets in the chart coordinates at x.
  std::vector<Jet> coordinate_jets(const JetSpace& space, std::span<const double> x) const {
    std::vector<Jet> E;
    E.reserve(x.size());
    for (size_t a = 0; a < x.size(); ++a) {
      Jet xa = Jet::variable(space, static_cast<int>(a), x[a]);
      E.push_back(kind == Kind::Log ? exp(xa) : xa);
    }
    return E;
  }
};

}  // namespace gtd
