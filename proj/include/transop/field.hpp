#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <vector>

#include "transop/mesh.hpp"
#include "transop/numerics.hpp"

namespace transop {

/// Dense N x N complex matrix, row-major. Kept deliberately small: the
/// system sizes here are 1 or 2, so no BLAS.
struct SquareMatrix {
  std::size_t n = 1;
  std::vector<cplx> a;

  SquareMatrix() : a(1, cplx{}) {}
  explicit SquareMatrix(std::size_t dim, cplx fill = {}) : n(dim), a(dim * dim, fill) {}

  static SquareMatrix identity(std::size_t dim) {
    SquareMatrix m(dim);
    for (std::size_t i = 0; i < dim; ++i) m(i, i) = 1.0;
    return m;
  }

  cplx& operator()(std::size_t i, std::size_t j) { return a[i * n + j]; }
  const cplx& operator()(std::size_t i, std::size_t j) const { return a[i * n + j]; }

  double max_abs() const {
    double m = 0.0;
    for (const auto& v : a) m = std::max(m, std::abs(v));
    return m;
  }
};

/// Matrix-valued coefficient sampled on a SpatialMesh. Off-node evaluation
/// uses cubic Hermite interpolation with finite-difference slopes, which is
/// C^1, reproduces nodal samples, and touches four neighbouring nodes.
class PotentialField {
public:
  PotentialField() = default;

  PotentialField(std::size_t dim, SpatialMesh mesh, std::vector<cplx> samples)
      : n_(dim), mesh_(std::move(mesh)), samples_(std::move(samples)) {
    if (dim == 0) throw std::invalid_argument("PotentialField: system size must be >= 1");
    if (samples_.size() != mesh_.size() * n_ * n_)
      throw std::invalid_argument("PotentialField: expected " + std::to_string(mesh_.size() * n_ * n_) + " samples, got " +
                                  std::to_string(samples_.size()));
    for (const auto& v : samples_)
      if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
        throw std::invalid_argument("PotentialField: non-finite sample");
    build_slopes();
  }

  /// Samples a callable f(x) -> SquareMatrix (or scalar for dim 1) at the nodes.
  template <class F> static PotentialField from_function(std::size_t dim, const SpatialMesh& mesh, F&& f) {
    std::vector<cplx> s(mesh.size() * dim * dim);
    for (std::size_t i = 0; i < mesh.size(); ++i) {
      const double x = mesh.node(i);
      if constexpr (std::is_convertible_v<std::invoke_result_t<F, double>, cplx>) {
        if (dim != 1) throw std::invalid_argument("PotentialField::from_function: scalar callable needs dim 1");
        s[i] = cplx(f(x));
      } else {
        const SquareMatrix m = f(x);
        if (m.n != dim) throw std::invalid_argument("PotentialField::from_function: callable returned wrong size");
        std::copy(m.a.begin(), m.a.end(), s.begin() + i * dim * dim);
      }
    }
    return PotentialField(dim, mesh, std::move(s));
  }

  static PotentialField zero(std::size_t dim, const SpatialMesh& mesh) {
    return PotentialField(dim, mesh, std::vector<cplx>(mesh.size() * dim * dim));
  }

  std::size_t dim() const { return n_; }
  const SpatialMesh& mesh() const { return mesh_; }
  std::span<const cplx> samples() const { return samples_; }

  /// Entry (r, c) at node i.
  cplx at(std::size_t i, std::size_t r, std::size_t c) const { return samples_[(i * n_ + r) * n_ + c]; }
  std::span<const cplx> node_matrix(std::size_t i) const { return {samples_.data() + i * n_ * n_, n_ * n_}; }

  SquareMatrix node_value(std::size_t i) const {
    SquareMatrix m(n_);
    auto s = node_matrix(i);
    std::copy(s.begin(), s.end(), m.a.begin());
    return m;
  }

  /// Interpolated value at x in [0, ell], written into out (n*n entries).
  void evaluate(double x, std::span<cplx> out) const {
    const double ell = mesh_.length();
    if (x < -1e-12 * ell || x > ell * (1.0 + 1e-12))
      throw std::out_of_range("PotentialField::evaluate: x outside [0, ell]");
    x = std::clamp(x, 0.0, ell);
    const double h = mesh_.step();
    const std::size_t last = mesh_.size() - 1;
    std::size_t i = std::min(static_cast<std::size_t>(x / h), last - 1);
    double s = (x - mesh_.node(i)) / h;
    // x / h can round to the wrong side of a node.
    if (std::abs(s) < 1e-12) s = 0.0;
    if (std::abs(s - 1.0) < 1e-12) s = 1.0;
    if (s <= 0.0) {
      auto m = node_matrix(i);
      std::copy(m.begin(), m.end(), out.begin());
      return;
    }
    if (s >= 1.0) {
      auto m = node_matrix(i + 1);
      std::copy(m.begin(), m.end(), out.begin());
      return;
    }
    const double s2 = s * s, s3 = s2 * s;
    const double h00 = 2 * s3 - 3 * s2 + 1, h10 = s3 - 2 * s2 + s, h01 = -2 * s3 + 3 * s2, h11 = s3 - s2;
    const std::size_t nn = n_ * n_;
    for (std::size_t k = 0; k < nn; ++k) {
      out[k] = h00 * samples_[i * nn + k] + h01 * samples_[(i + 1) * nn + k] +
               h * (h10 * slopes_[i * nn + k] + h11 * slopes_[(i + 1) * nn + k]);
    }
  }

  SquareMatrix evaluate(double x) const {
    SquareMatrix m(n_);
    evaluate(x, m.a);
    return m;
  }

  /// Scalar value for dim 1.
  cplx scalar(double x) const {
    cplx v;
    evaluate(x, std::span<cplx>(&v, 1));
    return v;
  }

  /// Max over all nodes of the max-entry norm.
  double sup_norm() const {
    double m = 0.0;
    for (const auto& v : samples_) m = std::max(m, std::abs(v));
    return m;
  }

private:
  void build_slopes() {
    const std::size_t n = mesh_.size(), nn = n_ * n_;
    const double h = mesh_.step();
    slopes_.assign(samples_.size(), cplx{});
    for (std::size_t k = 0; k < nn; ++k) {
      auto f = [&](std::size_t i) { return samples_[i * nn + k]; };
      slopes_[k] = (-3.0 * f(0) + 4.0 * f(1) - f(2)) / (2.0 * h);
      for (std::size_t i = 1; i + 1 < n; ++i) slopes_[i * nn + k] = (f(i + 1) - f(i - 1)) / (2.0 * h);
      slopes_[(n - 1) * nn + k] = (3.0 * f(n - 1) - 4.0 * f(n - 2) + f(n - 3)) / (2.0 * h);
    }
  }

  std::size_t n_ = 1;
  SpatialMesh mesh_;
  std::vector<cplx> samples_;
  std::vector<cplx> slopes_;
};

inline void require_compatible(const PotentialField& a, const PotentialField& b, const char* where) {
  if (a.dim() != b.dim() || !(a.mesh() == b.mesh()))
    throw std::invalid_argument(std::string(where) + ": potentials must share system size and mesh");
}

/// Pointwise sum a + scale * b.
inline PotentialField axpy(const PotentialField& a, cplx scale, const PotentialField& b) {
  require_compatible(a, b, "axpy");
  std::vector<cplx> s(a.samples().begin(), a.samples().end());
  for (std::size_t k = 0; k < s.size(); ++k) s[k] += scale * b.samples()[k];
  return PotentialField(a.dim(), a.mesh(), std::move(s));
}

/// max over nodes x_i <= x of the max-entry norm (the C[0,x] norm).
inline double sup_norm_prefix(const PotentialField& field, double x) {
  const auto& mesh = field.mesh();
  if (x < 0.0 || x > mesh.length() * (1.0 + 1e-14))
    throw std::out_of_range("sup_norm_prefix: x = " + std::to_string(x) + " outside [0, ell]");
  const std::size_t nn = field.dim() * field.dim();
  double m = 0.0;
  for (std::size_t i = 0; i < mesh.size() && mesh.node(i) <= x * (1.0 + 1e-14); ++i)
    for (std::size_t k = 0; k < nn; ++k) m = std::max(m, std::abs(field.samples()[i * nn + k]));
  return m;
}

/// Complex N-vector field on the space-time grid; values indexed (t_j, x_i, c).
class SolutionField {
public:
  SolutionField() = default;
  SolutionField(std::size_t dim, TimeMesh t_mesh, SpatialMesh x_mesh)
      : n_(dim), t_(std::move(t_mesh)), x_(std::move(x_mesh)), v_(t_.size() * x_.size() * dim) {}

  std::size_t dim() const { return n_; }
  const TimeMesh& t_mesh() const { return t_; }
  const SpatialMesh& x_mesh() const { return x_; }

  cplx& operator()(std::size_t j, std::size_t i, std::size_t c = 0) { return v_[(j * x_.size() + i) * n_ + c]; }
  const cplx& operator()(std::size_t j, std::size_t i, std::size_t c = 0) const {
    return v_[(j * x_.size() + i) * n_ + c];
  }

  /// All spatial values at time level j (x-major, component-minor).
  std::span<cplx> slice(std::size_t j) { return {v_.data() + j * x_.size() * n_, x_.size() * n_}; }
  std::span<const cplx> slice(std::size_t j) const { return {v_.data() + j * x_.size() * n_, x_.size() * n_}; }

  std::span<const cplx> values() const { return v_; }
  std::vector<cplx>& raw() { return v_; }

  /// Component c at node i as a time series.
  std::vector<cplx> time_series(std::size_t i, std::size_t c = 0) const {
    std::vector<cplx> out(t_.size());
    for (std::size_t j = 0; j < t_.size(); ++j) out[j] = (*this)(j, i, c);
    return out;
  }

  /// Component c at time level j as a spatial profile.
  std::vector<cplx> profile(std::size_t j, std::size_t c = 0) const {
    std::vector<cplx> out(x_.size());
    for (std::size_t i = 0; i < x_.size(); ++i) out[i] = (*this)(j, i, c);
    return out;
  }

  bool all_finite() const {
    return std::all_of(v_.begin(), v_.end(), [](const cplx& z) { return std::isfinite(z.real()) && std::isfinite(z.imag()); });
  }

  std::vector<std::string> warnings;

private:
  std::size_t n_ = 1;
  TimeMesh t_;
  SpatialMesh x_;
  std::vector<cplx> v_;
};

/// Trapezoid-weighted discrete L2 norm of one spatial slice (all components).
inline double l2_norm(std::span<const cplx> slice, std::size_t dim, double h) {
  const std::size_t n = slice.size() / dim;
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double w = (i == 0 || i + 1 == n) ? 0.5 : 1.0;
    for (std::size_t c = 0; c < dim; ++c) acc += w * std::norm(slice[i * dim + c]);
  }
  return std::sqrt(acc * h);
}

inline double max_abs(std::span<const cplx> v) {
  double m = 0.0;
  for (const auto& z : v) m = std::max(m, std::abs(z));
  return m;
}

inline double max_abs_diff(std::span<const cplx> a, std::span<const cplx> b) {
  if (a.size() != b.size()) throw std::invalid_argument("max_abs_diff: size mismatch");
  double m = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) m = std::max(m, std::abs(a[k] - b[k]));
  return m;
}

} // namespace transop
