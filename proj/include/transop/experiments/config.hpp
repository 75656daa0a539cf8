#pragma once

#include <array>
#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "transop/evolution.hpp"
#include "transop/experiments/functions.hpp"
#include "transop/mesh.hpp"

namespace transop::experiments {

enum class Scenario {
  theorem1_case1,
  theorem1_case2,
  corollary2,
  corollary3_schrodinger,
  theorem3_zero_init,
  corollary4_drift,
  theorem6_known_near_zero,
  remark_counterexample,
  reconstruct,
};

inline constexpr std::array<std::pair<Scenario, std::string_view>, 9> kScenarioNames{{
    {Scenario::theorem1_case1, "theorem1_case1"},
    {Scenario::theorem1_case2, "theorem1_case2"},
    {Scenario::corollary2, "corollary2"},
    {Scenario::corollary3_schrodinger, "corollary3_schrodinger"},
    {Scenario::theorem3_zero_init, "theorem3_zero_init"},
    {Scenario::corollary4_drift, "corollary4_drift"},
    {Scenario::theorem6_known_near_zero, "theorem6_known_near_zero"},
    {Scenario::remark_counterexample, "remark_counterexample"},
    {Scenario::reconstruct, "reconstruct"},
}};

inline std::string_view scenario_name(Scenario s) {
  for (const auto& [k, v] : kScenarioNames)
    if (k == s) return v;
  return "unknown";
}

inline std::optional<Scenario> scenario_from_name(std::string_view name) {
  for (const auto& [k, v] : kScenarioNames)
    if (v == name) return k;
  return std::nullopt;
}

struct GridConfig {
  double ell = 1.0;
  double T = 1.0;
  std::size_t n_x = 129;
  std::size_t n_t = 257;
  int levels = 3; ///< grids used by refinement studies: h, h/2, ...

  /// Level k halves both steps k times.
  std::pair<SpatialMesh, TimeMesh> meshes(int level = 0) const {
    const std::size_t f = std::size_t{1} << level;
    return make_meshes(ell, (n_x - 1) * f + 1, T, (n_t - 1) * f + 1);
  }
};

/// Parsed and validated top-level configuration. Scenario-specific keys
/// stay in the json sections and are validated by the scenario itself.
struct ExperimentConfig {
  Scenario scenario = Scenario::theorem1_case1;
  GridConfig grid;
  cplx sigma{1.0, 0.0};
  std::size_t N = 1;
  std::uint64_t seed = 0;
  json equation = json::object();
  json data = json::object();
  json assertions = json::object();
  json output = json::object();
  json raw;

  SpecContext spec_context() const { return {grid.ell, seed}; }

  double threshold(const char* key, double fallback) const {
    return number_or(assertions, key, fallback, "assertions");
  }

  bool has_equation(const char* key) const { return equation.contains(key) && !equation[key].is_null(); }
  bool has_data(const char* key) const { return data.contains(key) && !data[key].is_null(); }

  MatrixFunction potential(const char* key) const {
    if (!has_equation(key)) throw ConfigError(std::string("equation.") + key, "required for this scenario");
    return parse_matrix_function(equation[key], N, std::string("equation.") + key, spec_context());
  }
  std::optional<MatrixFunction> optional_potential(const char* key) const {
    if (!has_equation(key)) return std::nullopt;
    return potential(key);
  }
  ScalarFunction scalar_equation(const char* key) const {
    if (!has_equation(key)) throw ConfigError(std::string("equation.") + key, "required for this scenario");
    return parse_function(equation[key], std::string("equation.") + key, spec_context());
  }
  VectorFunction data_vector(const char* key) const {
    if (!has_data(key)) throw ConfigError(std::string("data.") + key, "required for this scenario");
    return parse_vector_function(data[key], N, std::string("data.") + key, spec_context());
  }
  double data_number(const char* key, double fallback) const { return number_or(data, key, fallback, "data"); }

  /// data.initial: one profile (N specs or a broadcast spec) per experiment.
  std::vector<VectorFunction> initial_profiles(const char* key = "initial") const {
    if (!has_data(key)) throw ConfigError(std::string("data.") + key, "required for this scenario");
    const json& j = data[key];
    const std::string path = std::string("data.") + key;
    std::vector<VectorFunction> out;
    const bool many = j.is_array() && !(j.size() == 2 && j[0].is_number());
    if (!many) {
      if (N != 1) throw ConfigError(path, "expected an array of " + std::to_string(N) + " profiles");
      out.push_back(parse_vector_function(j, 1, path, spec_context()));
      return out;
    }
    for (std::size_t k = 0; k < j.size(); ++k)
      out.push_back(parse_vector_function(j[k], N, path + "[" + std::to_string(k) + "]", spec_context()));
    return out;
  }

  bool output_flag(const char* key, bool fallback) const {
    if (!output.contains(key)) return fallback;
    if (!output[key].is_boolean()) throw ConfigError(std::string("output.") + key, "expected true or false");
    return output[key].get<bool>();
  }
};

namespace detail {

inline std::size_t require_count(const json& j, const char* key, const std::string& path, std::size_t minimum) {
  if (!j.contains(key)) throw ConfigError(path, std::string("missing '") + key + "'");
  if (!j[key].is_number_integer() || j[key].get<long long>() < static_cast<long long>(minimum))
    throw ConfigError(path + "." + key, "expected an integer >= " + std::to_string(minimum));
  return j[key].get<std::size_t>();
}

} // namespace detail

inline ExperimentConfig parse_config(const json& j) {
  if (!j.is_object()) throw ConfigError("", "configuration must be a JSON object");
  for (const char* key : {"scenario", "grid", "equation", "data", "assertions", "output"})
    if (!j.contains(key)) throw ConfigError("", std::string("missing required top-level key '") + key + "'");
  ExperimentConfig c;
  c.raw = j;
  if (!j["scenario"].is_string()) throw ConfigError("scenario", "expected a string");
  auto s = scenario_from_name(j["scenario"].get<std::string>());
  if (!s) throw ConfigError("scenario", "unknown scenario '" + j["scenario"].get<std::string>() + "'");
  c.scenario = *s;

  const json& g = j["grid"];
  if (!g.is_object()) throw ConfigError("grid", "expected an object");
  c.grid.ell = require_number(g, "ell", "grid");
  c.grid.T = require_number(g, "T", "grid");
  c.grid.n_x = detail::require_count(g, "n_x", "grid", 5);
  c.grid.n_t = detail::require_count(g, "n_t", "grid", 8);
  if (g.contains("levels")) c.grid.levels = static_cast<int>(detail::require_count(g, "levels", "grid", 1));
  if (!(c.grid.ell > 0.0)) throw ConfigError("grid.ell", "must be positive");
  if (!(c.grid.T > 0.0)) throw ConfigError("grid.T", "must be positive");

  for (const char* key : {"equation", "data", "assertions", "output"})
    if (!j[key].is_object()) throw ConfigError(key, "expected an object");
  c.equation = j["equation"];
  c.data = j["data"];
  c.assertions = j["assertions"];
  c.output = j["output"];

  c.sigma = c.equation.contains("sigma") ? parse_complex(c.equation["sigma"], "equation.sigma") : cplx(1.0);
  if (std::abs(c.sigma) == 0.0) throw ConfigError("equation.sigma", "must be nonzero");
  if (c.equation.contains("N")) c.N = detail::require_count(c.equation, "N", "equation", 1);
  if (c.data.contains("seed")) {
    if (!c.data["seed"].is_number_integer()) throw ConfigError("data.seed", "expected an integer");
    c.seed = c.data["seed"].get<std::uint64_t>();
  }
  return c;
}

/// Reads and parses a config file; JSON syntax errors carry line and column.
inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("", "cannot open config file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  json j;
  try {
    j = json::parse(buf.str());
  } catch (const json::parse_error& e) {
    throw ConfigError("", "malformed JSON in '" + path + "': " + e.what());
  }
  return parse_config(j);
}

} // namespace transop::experiments
