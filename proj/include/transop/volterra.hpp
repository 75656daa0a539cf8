#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "transop/field.hpp"
#include "transop/mesh.hpp"
#include "transop/numerics.hpp"

namespace transop {

/// Scalar complex samples on a TimeMesh.
class TimeSeries {
public:
  TimeSeries() = default;
  TimeSeries(TimeMesh mesh, std::vector<cplx> values) : mesh_(std::move(mesh)), v_(std::move(values)) {
    if (v_.size() != mesh_.size())
      throw std::invalid_argument("TimeSeries: expected " + std::to_string(mesh_.size()) + " samples, got " +
                                  std::to_string(v_.size()));
    for (const auto& z : v_)
      if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) throw std::invalid_argument("TimeSeries: non-finite sample");
  }

  template <class F> static TimeSeries sample(const TimeMesh& mesh, F&& f) {
    std::vector<cplx> v(mesh.size());
    for (std::size_t j = 0; j < v.size(); ++j) v[j] = cplx(f(mesh.node(j)));
    return TimeSeries(mesh, std::move(v));
  }

  const TimeMesh& mesh() const { return mesh_; }
  std::span<const cplx> values() const { return v_; }
  std::size_t size() const { return v_.size(); }
  const cplx& operator[](std::size_t j) const { return v_[j]; }

private:
  TimeMesh mesh_;
  std::vector<cplx> v_;
};

/// Causal trapezoid convolution (R * z)(t_k) = int_0^{t_k} R(tau) z(t_k - tau) dtau.
inline TimeSeries convolve(const TimeSeries& R, const TimeSeries& z) {
  if (!(R.mesh() == z.mesh())) throw std::invalid_argument("convolve: series live on different meshes");
  const std::size_t n = R.size();
  const double dt = R.mesh().step();
  std::vector<cplx> out(n);
  for (std::size_t k = 1; k < n; ++k) {
    cplx acc = 0.5 * (R[0] * z[k] + R[k] * z[0]);
    for (std::size_t l = 1; l < k; ++l) acc += R[l] * z[k - l];
    out[k] = acc * dt;
  }
  return TimeSeries(R.mesh(), std::move(out));
}

/// Raised when the leading coefficient of a second-kind equation vanishes.
class DegenerateKernelError : public std::domain_error {
public:
  using std::domain_error::domain_error;
};

inline constexpr double kDegenerateThreshold = 1e-12;

/// Solves R(0) z(t) + int_0^t R'(t - tau) z(tau) dtau = rhs(t) by forward
/// substitution with trapezoid weights, given R'.
inline TimeSeries solve_second_kind(const TimeSeries& R, const TimeSeries& R_prime, const TimeSeries& rhs,
                                    double threshold = kDegenerateThreshold) {
  if (!(R.mesh() == rhs.mesh()) || !(R.mesh() == R_prime.mesh()))
    throw std::invalid_argument("solve_second_kind: series live on different meshes");
  if (!(std::abs(R[0]) > threshold))
    throw DegenerateKernelError("solve_second_kind: |R(0)| = " + std::to_string(std::abs(R[0])) +
                                " is at or below " + std::to_string(threshold) +
                                "; the boundary signal must be nonzero at t = 0 for the equation to be invertible");
  const std::size_t n = R.size();
  const double dt = R.mesh().step();
  std::vector<cplx> z(n);
  z[0] = rhs[0] / R[0];
  const cplx pivot = R[0] + 0.5 * dt * R_prime[0];
  for (std::size_t k = 1; k < n; ++k) {
    cplx acc = 0.5 * R_prime[k] * z[0];
    for (std::size_t l = 1; l < k; ++l) acc += R_prime[k - l] * z[l];
    z[k] = (rhs[k] - dt * acc) / pivot;
  }
  return TimeSeries(R.mesh(), std::move(z));
}

/// Same, with R' from fourth-order finite differences of R.
inline TimeSeries solve_second_kind(const TimeSeries& R, const TimeSeries& rhs, double threshold = kDegenerateThreshold) {
  if (!(std::abs(R[0]) > threshold)) return solve_second_kind(R, R, rhs, threshold); // throws with the message above
  TimeSeries dR(R.mesh(), series_derivative<cplx>(R.values(), R.mesh().step(), 1));
  return solve_second_kind(R, dR, rhs, threshold);
}

/// The forward map z -> R(0) z + R' * z.
inline TimeSeries apply_second_kind(const TimeSeries& R, const TimeSeries& R_prime, const TimeSeries& z) {
  const auto conv = convolve(R_prime, z);
  std::vector<cplx> out(z.size());
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = R[0] * z[k] + conv[k];
  return TimeSeries(z.mesh(), std::move(out));
}

inline constexpr double kSupportTolerance = 1e-7;

/// First t_j with |f_j| > tol * scale; scale defaults to max|f|. Returns T
/// when nothing exceeds the level (including f == 0).
inline double support_infimum(const TimeSeries& f, double tol = kSupportTolerance, double scale = -1.0) {
  if (!(tol > 0.0)) throw std::invalid_argument("support_infimum: tol must be positive");
  if (scale < 0.0) scale = max_abs(f.values());
  const double level = tol * scale;
  if (scale == 0.0) return f.mesh().horizon();
  for (std::size_t j = 0; j < f.size(); ++j)
    if (std::abs(f[j]) > level) return f.mesh().node(j);
  return f.mesh().horizon();
}

} // namespace transop
