#pragma once

#include <cmath>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "json.hpp"

namespace transop::experiments {

using json = nlohmann::json;

/// One asserted metric with its threshold.
struct Assertion {
  std::string name;
  double value = 0.0;
  double threshold = 0.0;
  std::string comparison; // "<=", ">=", "==" or "true"
  bool pass = false;
  std::string note;
};

/// Numeric table; also the unit of CSV export.
struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;

  void write_csv(std::ostream& os) const {
    for (std::size_t c = 0; c < columns.size(); ++c) os << (c ? "," : "") << columns[c];
    os << '\n';
    const auto old = os.precision(17);
    for (const auto& r : rows) {
      for (std::size_t c = 0; c < r.size(); ++c) os << (c ? "," : "") << r[c];
      os << '\n';
    }
    os.precision(old);
  }
};

/// Line plot of some CSV columns against the first.
struct PlotRequest {
  std::string file;  ///< SVG file name
  std::string table; ///< key into ScenarioReport::series
  std::string title;
  std::vector<std::string> y_columns;
  bool log_y = false;
};

class ScenarioReport {
public:
  explicit ScenarioReport(std::string scenario = {}) : scenario_(std::move(scenario)) {}

  const std::string& scenario() const { return scenario_; }

  void add_grid(double ell, double T, std::size_t n_x, std::size_t n_t, const std::string& role) {
    grids_.push_back({{"role", role}, {"ell", ell}, {"T", T}, {"n_x", n_x}, {"n_t", n_t}});
  }

  void metric(const std::string& name, double value) { metrics_[name] = value; }
  void note(const std::string& name, const std::string& text) { notes_[name] = text; }
  void warn(const std::string& text) { warnings_.push_back(text); }
  void table(const std::string& name, Table t) { tables_[name] = std::move(t); }

  /// Data series written to `<name>.csv`.
  void series(const std::string& name, Table t) { series_[name] = std::move(t); }
  void plot(PlotRequest p) { plots_.push_back(std::move(p)); }

  bool check_le(const std::string& name, double value, double threshold, const std::string& note = {}) {
    return record({name, value, threshold, "<=", std::isfinite(value) && value <= threshold, note});
  }
  bool check_ge(const std::string& name, double value, double threshold, const std::string& note = {}) {
    return record({name, value, threshold, ">=", std::isfinite(value) && value >= threshold, note});
  }
  bool check_true(const std::string& name, bool ok, const std::string& note = {}) {
    return record({name, ok ? 1.0 : 0.0, 1.0, "true", ok, note});
  }

  bool passed() const {
    for (const auto& a : assertions_)
      if (!a.pass) return false;
    return true;
  }

  const std::vector<Assertion>& assertions() const { return assertions_; }
  const std::map<std::string, double>& metrics() const { return metrics_; }
  const std::map<std::string, Table>& tables() const { return tables_; }
  const std::map<std::string, Table>& all_series() const { return series_; }
  const std::vector<PlotRequest>& plots() const { return plots_; }
  const std::vector<std::string>& warnings() const { return warnings_; }

  double metric_or(const std::string& name, double fallback) const {
    auto it = metrics_.find(name);
    return it == metrics_.end() ? fallback : it->second;
  }

  const Assertion* find_assertion(const std::string& name) const {
    for (const auto& a : assertions_)
      if (a.name == name) return &a;
    return nullptr;
  }

  /// Everything except provenance, which the caller appends.
  json to_json() const {
    json j;
    j["scenario"] = scenario_;
    j["grids"] = grids_;
    json m = json::object();
    for (const auto& [k, v] : metrics_) m[k] = finite_or_string(v);
    j["metrics"] = m;
    json n = json::object();
    for (const auto& [k, v] : notes_) n[k] = v;
    j["notes"] = n;
    json t = json::object();
    for (const auto& [k, v] : tables_) {
      json rows = json::array();
      for (const auto& r : v.rows) {
        json row = json::array();
        for (double x : r) row.push_back(finite_or_string(x));
        rows.push_back(row);
      }
      t[k] = {{"columns", v.columns}, {"rows", rows}};
    }
    j["tables"] = t;
    json a = json::array();
    for (const auto& x : assertions_)
      a.push_back({{"name", x.name},
                   {"value", finite_or_string(x.value)},
                   {"threshold", finite_or_string(x.threshold)},
                   {"comparison", x.comparison},
                   {"pass", x.pass},
                   {"note", x.note}});
    j["assertions"] = a;
    j["warnings"] = warnings_;
    j["verdict"] = passed() ? "pass" : "fail";
    return j;
  }

private:
  static json finite_or_string(double v) {
    if (std::isfinite(v)) return v;
    return std::isnan(v) ? "nan" : (v > 0 ? "inf" : "-inf");
  }

  bool record(Assertion a) {
    assertions_.push_back(std::move(a));
    return assertions_.back().pass;
  }

  std::string scenario_;
  json grids_ = json::array();
  std::map<std::string, double> metrics_;
  std::map<std::string, std::string> notes_;
  std::map<std::string, Table> tables_;
  std::map<std::string, Table> series_;
  std::vector<PlotRequest> plots_;
  std::vector<Assertion> assertions_;
  std::vector<std::string> warnings_;
};

} // namespace transop::experiments
