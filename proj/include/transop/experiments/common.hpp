#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "transop/evolution.hpp"
#include "transop/experiments/config.hpp"
#include "transop/experiments/report.hpp"

namespace transop::experiments {

struct RunOptions {
  unsigned threads = 1;
};

/// data.right: "neumann_zero" (default) or {"type": "dirichlet", "g": spec}.
inline RightBoundary parse_right_boundary(const ExperimentConfig& cfg, const TimeMesh& tm) {
  if (!cfg.has_data("right")) return NeumannZero{};
  const json& j = cfg.data["right"];
  if (j.is_string() && j.get<std::string>() == "neumann_zero") return NeumannZero{};
  if (j.is_object() && j.value("type", "") == "neumann_zero") return NeumannZero{};
  if (j.is_object() && j.value("type", "") == "dirichlet") {
    if (!j.contains("g")) throw ConfigError("data.right", "dirichlet boundary needs 'g'");
    DirichletData d;
    d.values = parse_vector_function(j["g"], cfg.N, "data.right.g", cfg.spec_context()).sample(tm);
    return d;
  }
  throw ConfigError("data.right", "expected \"neumann_zero\" or {\"type\": \"dirichlet\", \"g\": ...}");
}

/// max_j |a(t_j) - b(t_{f j})| over all components: compares a coarse trace
/// with one on a mesh refined by `factor`.
inline double trace_gap(std::span<const cplx> coarse, std::span<const cplx> fine, std::size_t dim, std::size_t factor) {
  const std::size_t n = coarse.size() / dim;
  if ((n - 1) * factor + 1 != fine.size() / dim) throw std::invalid_argument("trace_gap: meshes are not nested");
  double m = 0.0;
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t c = 0; c < dim; ++c) m = std::max(m, std::abs(coarse[j * dim + c] - fine[j * factor * dim + c]));
  return m;
}

/// Observed orders for a halving sequence, with a table row per level.
struct ConvergenceStudy {
  std::vector<double> h;
  std::vector<double> errors;

  std::vector<double> orders() const { return observed_orders(errors); }

  double min_order() const {
    const auto o = orders();
    if (o.empty()) return std::numeric_limits<double>::quiet_NaN();
    return *std::min_element(o.begin(), o.end());
  }

  /// True when every error is at roundoff level, so orders carry no information.
  bool exact(double floor = 1e-14) const {
    return std::all_of(errors.begin(), errors.end(), [&](double e) { return e <= floor; });
  }

  Table table(const std::string& error_name) const {
    Table t;
    t.columns = {"h", error_name, "observed_order"};
    const auto o = orders();
    for (std::size_t k = 0; k < errors.size(); ++k)
      t.rows.push_back({h[k], errors[k], k == 0 ? std::numeric_limits<double>::quiet_NaN() : o[k - 1]});
    return t;
  }
};

/// Records a convergence assertion: every observed order must reach
/// `min_order`, unless all errors vanish to roundoff.
inline bool assert_convergence(ScenarioReport& rep, const std::string& name, const ConvergenceStudy& s, double min_order) {
  rep.table(name, s.table("error"));
  for (std::size_t k = 0; k < s.errors.size(); ++k) rep.metric(name + ".error_level" + std::to_string(k), s.errors[k]);
  if (s.exact()) {
    rep.note(name, "all errors at roundoff level; the identity holds exactly");
    return rep.check_true(name + ".exact", true);
  }
  return rep.check_ge(name + ".min_observed_order", s.min_order(), min_order);
}

/// Real and imaginary parts of N-vector time series as CSV columns.
inline void append_series_columns(Table& t, const std::string& prefix, std::span<const cplx> values, std::size_t dim) {
  for (std::size_t c = 0; c < dim; ++c) {
    const std::string suffix = dim > 1 ? std::to_string(c + 1) : "";
    t.columns.push_back("re_" + prefix + suffix);
    t.columns.push_back("im_" + prefix + suffix);
  }
  const std::size_t n = values.size() / dim;
  if (t.rows.size() < n) t.rows.resize(n);
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t c = 0; c < dim; ++c) {
      t.rows[j].push_back(values[j * dim + c].real());
      t.rows[j].push_back(values[j * dim + c].imag());
    }
}

inline Table time_axis(const TimeMesh& tm) {
  Table t;
  t.columns = {"t"};
  for (std::size_t j = 0; j < tm.size(); ++j) t.rows.push_back({tm.node(j)});
  return t;
}

inline Table space_axis(const SpatialMesh& xm) {
  Table t;
  t.columns = {"x"};
  for (std::size_t i = 0; i < xm.size(); ++i) t.rows.push_back({xm.node(i)});
  return t;
}

inline std::string complex_text(cplx z) {
  return "(" + std::to_string(z.real()) + ", " + std::to_string(z.imag()) + ")";
}

} // namespace transop::experiments
