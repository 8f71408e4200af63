#pragma once

#include <ostream>
#include <span>
#include <vector>

#include "json.hpp"

#include "gtd/equilibrium.hpp"
#include "gtd/geodesic.hpp"

namespace gtd {

inline nlohmann::json to_json(const Matd& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (int i = 0; i < m.rows; ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (int j = 0; j < m.cols; ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline nlohmann::json to_json(const Tensor3& t) {
  nlohmann::json out = nlohmann::json::array();
  for (int i = 0; i < t.n; ++i) {
    nlohmann::json jj = nlohmann::json::array();
    for (int j = 0; j < t.n; ++j) {
      nlohmann::json kk = nlohmann::json::array();
      for (int k = 0; k < t.n; ++k) kk.push_back(t(i, j, k));
      jj.push_back(std::move(kk));
    }
    out.push_back(std::move(jj));
  }
  return out;
}

inline nlohmann::json to_json(const Tensor4& t) {
  nlohmann::json out = nlohmann::json::array();
  for (int i = 0; i < t.n; ++i) {
    nlohmann::json jj = nlohmann::json::array();
    for (int j = 0; j < t.n; ++j) {
      nlohmann::json kk = nlohmann::json::array();
      for (int k = 0; k < t.n; ++k) {
        nlohmann::json ll = nlohmann::json::array();
        for (int l = 0; l < t.n; ++l) ll.push_back(t(i, j, k, l));
        kk.push_back(std::move(ll));
      }
      jj.push_back(std::move(kk));
    }
    out.push_back(std::move(jj));
  }
  return out;
}

inline nlohmann::json to_json(const CurvatureReport& rep) {
  nlohmann::json j;
  j["g"] = to_json(rep.g);
  j["g_inv"] = to_json(rep.g_inv);
  j["christoffel"] = to_json(rep.christoffel);
  j["riemann"] = to_json(rep.riemann);
  j["ricci"] = to_json(rep.ricci);
  j["scalar_R"] = rep.scalar_R;
  j["det_g"] = rep.det_g;
  if (rep.singular_indicator) j["D"] = *rep.singular_indicator;
  return j;
}

inline void write_curvature_csv_header(std::ostream& os, int n) {
  for (int a = 1; a <= n; ++a) os << 'E' << a << ',';
  os << "scalar_R,det_g,D\n";
}

inline void write_curvature_csv_row(std::ostream& os, std::span<const double> E,
                                    const CurvatureReport& rep) {
  for (double e : E) os << format_double(e) << ',';
  os << format_double(rep.scalar_R) << ',' << format_double(rep.det_g) << ',';
  if (rep.singular_indicator) os << format_double(*rep.singular_indicator);
  os << '\n';
}

inline nlohmann::json trace_to_json(const GeodesicTrace& trace) {
  nlohmann::json j;
  j["chart"] = trace.chart.name();
  j["status"] = to_string(trace.status);
  j["length"] = trace.length;
  nlohmann::json samples = nlohmann::json::array();
  for (const GeodesicSample& s : trace.samples) {
    nlohmann::json row;
    row["tau"] = s.tau;
    row["E"] = s.x;
    row["v"] = s.v;
    row["S"] = s.S;
    row["ds_accum"] = s.length;
    samples.push_back(std::move(row));
  }
  j["samples"] = std::move(samples);
  return j;
}

// Residual report entries for the field-equation checks; the divergence term
// is differentiated exactly through the jet composition, so the method tag is
// "exact" and the error estimate zero whenever the closed form is available
// (always, for expression-backed systems).
inline nlohmann::json residual_report(std::span<const double> residual, const char* method = "exact",
                                      double fd_error_estimate = 0.0) {
  nlohmann::json arr = nlohmann::json::array();
  for (size_t A = 0; A < residual.size(); ++A) {
    nlohmann::json entry;
    entry["A_index"] = A;
    entry["residual"] = residual[A];
    entry["method"] = method;
    entry["fd_error_estimate"] = fd_error_estimate;
    arr.push_back(std::move(entry));
  }
  return arr;
}

}  // namespace gtd
