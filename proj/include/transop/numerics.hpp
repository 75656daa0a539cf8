#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace transop {

using cplx = std::complex<double>;

namespace detail {

template <class T> inline T simpson_block(const T& a, const T& b, const T& c) { return a + 4.0 * b + c; }

} // namespace detail

/// Composite Simpson over equally spaced samples. Odd interval counts close
/// with Simpson 3/8 on the last three intervals; a single interval falls
/// back to the trapezoid rule.
template <class T> T simpson_integral(std::span<const T> f, double step) {
  const std::size_t n = f.size();
  if (n < 2) return T{};
  const std::size_t m = n - 1; // intervals
  if (m == 1) return 0.5 * step * (f[0] + f[1]);
  T acc{};
  std::size_t simpson_end = (m % 2 == 0) ? m : m - 3;
  for (std::size_t k = 0; k + 2 <= simpson_end; k += 2)
    acc += detail::simpson_block(f[k], f[k + 1], f[k + 2]);
  acc *= step / 3.0;
  if (m % 2 == 1) {
    const std::size_t k = m - 3;
    acc += 3.0 * step / 8.0 * (f[k] + 3.0 * f[k + 1] + 3.0 * f[k + 2] + f[k + 3]);
  }
  return acc;
}

/// Running integral F_k = int_0^{x_k} f, fourth order at every node (the
/// first node uses the quadratic through f0, f1, f2).
template <class T> std::vector<T> cumulative_simpson(std::span<const T> f, double step) {
  const std::size_t n = f.size();
  std::vector<T> out(n, T{});
  if (n < 2) return out;
  if (n == 2) {
    out[1] = 0.5 * step * (f[0] + f[1]);
    return out;
  }
  out[1] = step / 12.0 * (5.0 * f[0] + 8.0 * f[1] - f[2]);
  for (std::size_t k = 2; k < n; k += 2) out[k] = out[k - 2] + step / 3.0 * detail::simpson_block(f[k - 2], f[k - 1], f[k]);
  for (std::size_t k = 3; k < n; k += 2)
    out[k] = out[k - 3] + 3.0 * step / 8.0 * (f[k - 3] + 3.0 * f[k - 2] + 3.0 * f[k - 1] + f[k]);
  return out;
}

/// Fornberg's recursion: weights w such that sum_k w_k f(nodes_k) approximates
/// the order-th derivative at z.
inline std::vector<double> fornberg_weights(double z, std::span<const double> nodes, int order) {
  const int n = static_cast<int>(nodes.size());
  if (order < 0 || order >= n) throw std::invalid_argument("fornberg_weights: need more nodes than derivative order");
  std::vector<double> c((order + 1) * n, 0.0);
  auto C = [&](int k, int j) -> double& { return c[k * n + j]; };
  double c1 = 1.0;
  double c4 = nodes[0] - z;
  C(0, 0) = 1.0;
  for (int i = 1; i < n; ++i) {
    const int mn = std::min(i, order);
    double c2 = 1.0;
    const double c5 = c4;
    c4 = nodes[i] - z;
    for (int j = 0; j < i; ++j) {
      const double c3 = nodes[i] - nodes[j];
      c2 *= c3;
      if (j == i - 1) {
        for (int k = mn; k >= 1; --k) C(k, i) = c1 * (k * C(k - 1, i - 1) - c5 * C(k, i - 1)) / c2;
        C(0, i) = -c1 * c5 * C(0, i - 1) / c2;
      }
      for (int k = mn; k >= 1; --k) C(k, j) = (c4 * C(k, j) - k * C(k - 1, j)) / c3;
      C(0, j) = c4 * C(0, j) / c3;
    }
    c1 = c2;
  }
  return {c.begin() + order * n, c.begin() + (order + 1) * n};
}

/// Weights for the order-th derivative at integer offset `at` of a uniform
/// stencil 0..width-1 with unit spacing.
inline std::vector<double> uniform_stencil(int width, int at, int order) {
  std::vector<double> pts(width);
  for (int k = 0; k < width; ++k) pts[k] = static_cast<double>(k);
  return fornberg_weights(static_cast<double>(at), pts, order);
}

/// order-th derivative of a uniformly sampled series, fourth-order accurate:
/// centered stencils in the interior, one-sided near the ends.
template <class T> std::vector<T> series_derivative(std::span<const T> f, double step, int order) {
  const int n = static_cast<int>(f.size());
  if (order == 0) return {f.begin(), f.end()};
  const int width = order + 4 + ((order % 2 == 0) ? 1 : 0);
  if (n < width) throw std::invalid_argument("series_derivative: series too short for the stencil");
  std::vector<T> out(n);
  const double scale = std::pow(step, -order);
  const int half = width / 2;
  std::vector<std::vector<double>> cache(width);
  for (int j = 0; j < n; ++j) {
    const int start = std::clamp(j - half, 0, n - width);
    const int at = j - start;
    if (cache[at].empty()) cache[at] = uniform_stencil(width, at, order);
    T acc{};
    for (int k = 0; k < width; ++k) acc += cache[at][k] * f[start + k];
    out[j] = acc * scale;
  }
  return out;
}

/// order-th derivative at the first sample using the one-sided stencil on
/// order+4 points (fourth-order accurate).
template <class T> T derivative_at_start(std::span<const T> f, double step, int order) {
  const int width = order + 4;
  if (static_cast<int>(f.size()) < width) throw std::invalid_argument("derivative_at_start: series too short");
  const auto w = uniform_stencil(width, 0, order);
  T acc{};
  for (int k = 0; k < width; ++k) acc += w[k] * f[k];
  return acc * std::pow(step, -order);
}

/// Second derivative on a uniform grid: centered inside, second-order
/// one-sided four-point stencils at both ends. Exact for quadratics.
template <class T> std::vector<T> second_derivative(std::span<const T> f, double h) {
  const std::size_t n = f.size();
  if (n < 3) throw std::invalid_argument("second_derivative: need at least 3 samples");
  std::vector<T> out(n);
  const double ih2 = 1.0 / (h * h);
  for (std::size_t i = 1; i + 1 < n; ++i) out[i] = (f[i - 1] - 2.0 * f[i] + f[i + 1]) * ih2;
  if (n >= 4) {
    out[0] = (2.0 * f[0] - 5.0 * f[1] + 4.0 * f[2] - f[3]) * ih2;
    out[n - 1] = (2.0 * f[n - 1] - 5.0 * f[n - 2] + 4.0 * f[n - 3] - f[n - 4]) * ih2;
  } else {
    out[0] = out[1];
    out[n - 1] = out[1];
  }
  return out;
}

/// First derivative: centered inside, second-order one-sided at the ends.
template <class T> std::vector<T> first_derivative(std::span<const T> f, double h) {
  const std::size_t n = f.size();
  if (n < 3) throw std::invalid_argument("first_derivative: need at least 3 samples");
  std::vector<T> out(n);
  for (std::size_t i = 1; i + 1 < n; ++i) out[i] = (f[i + 1] - f[i - 1]) / (2.0 * h);
  out[0] = (-3.0 * f[0] + 4.0 * f[1] - f[2]) / (2.0 * h);
  out[n - 1] = (3.0 * f[n - 1] - 4.0 * f[n - 2] + f[n - 3]) / (2.0 * h);
  return out;
}

/// Observed convergence orders log2(e_k / e_{k+1}) for a halving sequence.
inline std::vector<double> observed_orders(std::span<const double> errors) {
  std::vector<double> out;
  for (std::size_t k = 0; k + 1 < errors.size(); ++k) out.push_back(std::log2(errors[k] / errors[k + 1]));
  return out;
}

} // namespace transop
