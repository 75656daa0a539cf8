#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <memory>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "transop/field.hpp"

namespace transop::experiments {

using json = nlohmann::json;

/// Invalid or incomplete configuration; `path` names the offending key.
class ConfigError : public std::runtime_error {
public:
  ConfigError(const std::string& path, const std::string& msg)
      : std::runtime_error(path.empty() ? msg : path + ": " + msg), path_(path) {}
  const std::string& path() const { return path_; }

private:
  std::string path_;
};

using ScalarFunction = std::function<cplx(double)>;

/// N x N table of scalar functions.
struct MatrixFunction {
  std::size_t n = 1;
  std::vector<ScalarFunction> entries;

  SquareMatrix operator()(double x) const {
    SquareMatrix m(n);
    for (std::size_t k = 0; k < n * n; ++k) m.a[k] = entries[k](x);
    return m;
  }
};

/// A number, or [re, im].
inline cplx parse_complex(const json& j, const std::string& path) {
  if (j.is_number()) return {j.get<double>(), 0.0};
  if (j.is_array() && j.size() == 2 && j[0].is_number() && j[1].is_number())
    return {j[0].get<double>(), j[1].get<double>()};
  throw ConfigError(path, "expected a number or a [re, im] pair");
}

inline double require_number(const json& j, const char* key, const std::string& path) {
  if (!j.contains(key)) throw ConfigError(path, std::string("missing '") + key + "'");
  if (!j[key].is_number()) throw ConfigError(path + "." + key, "expected a number");
  return j[key].get<double>();
}

inline double number_or(const json& j, const char* key, double fallback, const std::string& path) {
  if (!j.contains(key)) return fallback;
  if (!j[key].is_number()) throw ConfigError(path + "." + key, "expected a number");
  return j[key].get<double>();
}

/// Context for specs that need a length scale or a seed.
struct SpecContext {
  double period = 1.0;
  std::uint64_t seed = 0;
};

inline ScalarFunction parse_function(const json& j, const std::string& path, const SpecContext& ctx = {});

namespace detail {

inline std::vector<cplx> parse_coefficients(const json& j, const std::string& path) {
  if (!j.is_array() || j.empty()) throw ConfigError(path, "expected a non-empty array of coefficients");
  std::vector<cplx> out;
  for (std::size_t k = 0; k < j.size(); ++k) out.push_back(parse_complex(j[k], path + "[" + std::to_string(k) + "]"));
  return out;
}

} // namespace detail

/// Builds a callable from a JSON spec. Numbers and [re, im] pairs are
/// constants; objects carry a "type" key.
inline ScalarFunction parse_function(const json& j, const std::string& path, const SpecContext& ctx) {
  if (j.is_number() || (j.is_array() && j.size() == 2 && j[0].is_number())) {
    const cplx c = parse_complex(j, path);
    return [c](double) { return c; };
  }
  if (!j.is_object()) throw ConfigError(path, "expected a function spec object");
  if (!j.contains("type") || !j["type"].is_string()) throw ConfigError(path, "missing string 'type'");
  const std::string type = j["type"].get<std::string>();
  const cplx amp = j.contains("amplitude") ? parse_complex(j["amplitude"], path + ".amplitude") : cplx(1.0);

  if (type == "constant") {
    if (!j.contains("value")) throw ConfigError(path, "missing 'value'");
    const cplx c = parse_complex(j["value"], path + ".value");
    return [c](double) { return c; };
  }
  if (type == "polynomial") {
    if (!j.contains("coeffs")) throw ConfigError(path, "missing 'coeffs'");
    auto c = detail::parse_coefficients(j["coeffs"], path + ".coeffs");
    return [c](double x) {
      cplx acc{};
      for (std::size_t k = c.size(); k-- > 0;) acc = acc * x + c[k];
      return acc;
    };
  }
  if (type == "bump") {
    // amplitude * sin^(2p)(pi (x - a) / (b - a)) on [a, b]; C^(2p-1).
    const double a = require_number(j, "from", path), b = require_number(j, "to", path);
    const double p = number_or(j, "power", 1.0, path);
    if (!(b > a)) throw ConfigError(path, "'to' must exceed 'from'");
    if (!(p >= 1.0)) throw ConfigError(path + ".power", "must be >= 1");
    return [=](double x) -> cplx {
      if (x <= a || x >= b) return 0.0;
      return amp * std::pow(std::sin(std::numbers::pi * (x - a) / (b - a)), 2.0 * p);
    };
  }
  if (type == "cosine_series") {
    if (!j.contains("coeffs")) throw ConfigError(path, "missing 'coeffs'");
    auto c = detail::parse_coefficients(j["coeffs"], path + ".coeffs");
    const double L = number_or(j, "period", ctx.period, path);
    return [c, L](double x) {
      cplx acc{};
      for (std::size_t k = 0; k < c.size(); ++k) acc += c[k] * std::cos(static_cast<double>(k) * std::numbers::pi * x / L);
      return acc;
    };
  }
  if (type == "random_cosine") {
    // mean + amplitude * sum_k c_k cos(k pi x / L) / k^decay, c_k ~ U(-1, 1).
    const int terms = static_cast<int>(number_or(j, "terms", 6, path));
    if (terms < 1) throw ConfigError(path + ".terms", "must be >= 1");
    const double decay = number_or(j, "decay", 2.0, path);
    const cplx mean = j.contains("mean") ? parse_complex(j["mean"], path + ".mean") : cplx{};
    const double L = number_or(j, "period", ctx.period, path);
    const auto seed = static_cast<std::uint64_t>(number_or(j, "seed", static_cast<double>(ctx.seed), path));
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    std::vector<double> c(terms);
    for (auto& v : c) v = unit(rng);
    return [=](double x) {
      cplx acc = mean;
      for (int k = 1; k <= terms; ++k)
        acc += amp * c[k - 1] * std::cos(k * std::numbers::pi * x / L) / std::pow(static_cast<double>(k), decay);
      return acc;
    };
  }
  if (type == "ramp_from") {
    const double x0 = require_number(j, "start", path);
    const double p = number_or(j, "power", 2.0, path);
    return [=](double x) -> cplx { return x > x0 ? amp * std::pow(x - x0, p) : cplx{}; };
  }
  if (type == "flat_exp") {
    // amplitude * exp(-scale / t) for t > 0: every derivative vanishes at 0.
    const double s = number_or(j, "scale", 1.0, path);
    if (!(s > 0.0)) throw ConfigError(path + ".scale", "must be positive");
    return [=](double t) -> cplx { return t > 0.0 ? amp * std::exp(-s / t) : cplx{}; };
  }
  if (type == "exponential") {
    const cplx rate = j.contains("rate") ? parse_complex(j["rate"], path + ".rate") : cplx(1.0);
    return [=](double x) { return amp * std::exp(rate * x); };
  }
  if (type == "sum") {
    if (!j.contains("terms") || !j["terms"].is_array()) throw ConfigError(path, "missing array 'terms'");
    std::vector<ScalarFunction> parts;
    for (std::size_t k = 0; k < j["terms"].size(); ++k)
      parts.push_back(parse_function(j["terms"][k], path + ".terms[" + std::to_string(k) + "]", ctx));
    return [parts](double x) {
      cplx acc{};
      for (const auto& f : parts) acc += f(x);
      return acc;
    };
  }
  if (type == "matrix") throw ConfigError(path, "a matrix spec is not allowed where a scalar function is expected");
  throw ConfigError(path, "unknown function type '" + type + "'");
}

/// Matrix specs ({"type": "matrix", "entries": [[...], ...]}) or, for n = 1,
/// any scalar spec. A scalar spec with n > 1 means that function times the
/// identity.
inline MatrixFunction parse_matrix_function(const json& j, std::size_t n, const std::string& path,
                                            const SpecContext& ctx = {}) {
  MatrixFunction m;
  m.n = n;
  if (j.is_object() && j.value("type", "") == "matrix") {
    const auto& e = j.contains("entries") ? j["entries"] : json();
    if (!e.is_array() || e.size() != n) throw ConfigError(path + ".entries", "expected " + std::to_string(n) + " rows");
    for (std::size_t r = 0; r < n; ++r) {
      if (!e[r].is_array() || e[r].size() != n)
        throw ConfigError(path + ".entries[" + std::to_string(r) + "]", "expected " + std::to_string(n) + " columns");
      for (std::size_t c = 0; c < n; ++c)
        m.entries.push_back(
            parse_function(e[r][c], path + ".entries[" + std::to_string(r) + "][" + std::to_string(c) + "]", ctx));
    }
    return m;
  }
  auto f = parse_function(j, path, ctx);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < n; ++c) m.entries.push_back(r == c ? f : ScalarFunction([](double) { return cplx{}; }));
  return m;
}

/// Samples a matrix function on the mesh.
inline PotentialField sample_potential(const MatrixFunction& f, const SpatialMesh& mesh) {
  return PotentialField::from_function(f.n, mesh, [&](double x) { return f(x); });
}

/// Vector-valued profile: N scalar functions.
struct VectorFunction {
  std::vector<ScalarFunction> components;

  std::vector<cplx> sample(const SpatialMesh& mesh) const {
    const std::size_t N = components.size();
    std::vector<cplx> out(mesh.size() * N);
    for (std::size_t i = 0; i < mesh.size(); ++i)
      for (std::size_t c = 0; c < N; ++c) out[i * N + c] = components[c](mesh.node(i));
    return out;
  }

  std::vector<cplx> sample(const TimeMesh& mesh) const {
    const std::size_t N = components.size();
    std::vector<cplx> out(mesh.size() * N);
    for (std::size_t j = 0; j < mesh.size(); ++j)
      for (std::size_t c = 0; c < N; ++c) out[j * N + c] = components[c](mesh.node(j));
    return out;
  }
};

/// A single spec (N = 1, or broadcast to every component) or an array of N
/// specs. For N = 2 a two-element array is always read as components; a
/// complex constant to broadcast must then be written as a "constant" spec.
inline VectorFunction parse_vector_function(const json& j, std::size_t n, const std::string& path,
                                            const SpecContext& ctx = {}) {
  VectorFunction v;
  const bool pair = j.is_array() && j.size() == 2 && j[0].is_number() && j[1].is_number();
  const bool list = j.is_array() && (n > 1 ? (j.size() == n || !pair) : !pair);
  if (list) {
    if (j.size() != n) throw ConfigError(path, "expected " + std::to_string(n) + " components");
    for (std::size_t c = 0; c < n; ++c) v.components.push_back(parse_function(j[c], path + "[" + std::to_string(c) + "]", ctx));
  } else {
    auto f = parse_function(j, path, ctx);
    v.components.assign(n, f);
  }
  return v;
}

} // namespace transop::experiments
