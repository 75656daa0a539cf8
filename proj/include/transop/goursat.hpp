#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "transop/field.hpp"
#include "transop/numerics.hpp"

namespace transop {

/// Thrown when the successive approximation does not settle within max_iter.
class ConvergenceError : public std::runtime_error {
public:
  ConvergenceError(const std::string& what, std::vector<double> history)
      : std::runtime_error(what), history_(std::move(history)) {}
  const std::vector<double>& history() const { return history_; }

private:
  std::vector<double> history_;
};

/// Kernel K(x_i, y_j), j <= i, stored packed row-major: node (i, j) lives at
/// i(i+1)/2 + j, each node holding an N x N row-major block.
class TriangularKernel {
public:
  TriangularKernel() = default;
  TriangularKernel(std::size_t dim, SpatialMesh mesh)
      : n_(dim), mesh_(std::move(mesh)), v_(node_count(mesh_.size()) * dim * dim) {}

  static std::size_t node_count(std::size_t n_x) { return n_x * (n_x + 1) / 2; }
  static std::size_t index(std::size_t i, std::size_t j) { return i * (i + 1) / 2 + j; }

  std::size_t dim() const { return n_; }
  const SpatialMesh& mesh() const { return mesh_; }

  std::span<cplx> block(std::size_t i, std::size_t j) { return {v_.data() + index(i, j) * n_ * n_, n_ * n_}; }
  std::span<const cplx> block(std::size_t i, std::size_t j) const {
    return {v_.data() + index(i, j) * n_ * n_, n_ * n_};
  }
  cplx& operator()(std::size_t i, std::size_t j, std::size_t r = 0, std::size_t c = 0) {
    return v_[index(i, j) * n_ * n_ + r * n_ + c];
  }
  const cplx& operator()(std::size_t i, std::size_t j, std::size_t r = 0, std::size_t c = 0) const {
    return v_[index(i, j) * n_ * n_ + r * n_ + c];
  }

  std::span<const cplx> values() const { return v_; }
  std::vector<cplx>& raw() { return v_; }

  double sup_abs() const { return max_abs(v_); }

  /// K(x_i, 0) as an N x N matrix sequence over i (entry (r, c) of each node).
  std::vector<cplx> boundary_column(std::size_t r = 0, std::size_t c = 0) const {
    std::vector<cplx> out(mesh_.size());
    for (std::size_t i = 0; i < mesh_.size(); ++i) out[i] = (*this)(i, 0, r, c);
    return out;
  }

  /// Number of sweeps the solver used and the sup-change after each one.
  std::size_t iterations = 0;
  std::vector<double> history;

private:
  std::size_t n_ = 1;
  SpatialMesh mesh_;
  std::vector<cplx> v_;
};

/// Symmetric extension to {-x <= y <= x}; stores nothing beyond its source.
class ExtendedKernel {
public:
  explicit ExtendedKernel(TriangularKernel source) : src_(std::move(source)) {}

  std::size_t dim() const { return src_.dim(); }
  const SpatialMesh& mesh() const { return src_.mesh(); }
  const TriangularKernel& source() const { return src_; }

  /// K(x_i, y_j) for -i <= j <= i.
  const cplx& operator()(std::size_t i, long j, std::size_t r = 0, std::size_t c = 0) const {
    const auto aj = static_cast<std::size_t>(j < 0 ? -j : j);
    if (aj > i) throw std::out_of_range("ExtendedKernel: node outside {|y| <= x}");
    return src_(i, aj, r, c);
  }

  /// |dK/dy(x,0)| estimate of the source, recorded at construction time.
  double neumann_defect = 0.0;

private:
  TriangularKernel src_;
};

enum class SweepOrder {
  /// Classic successive approximation: every sweep rebuilds the whole
  /// lattice from the previous iterate.
  row_major,
  /// In-place sweeps marching along anti-diagonals xi + eta = const, each
  /// node reusing values already refreshed in the same sweep.
  characteristic_diagonal,
};

struct GoursatOptions {
  double tol = 1e-12;
  std::size_t max_iter = 60;
  SweepOrder order = SweepOrder::row_major;
};

namespace detail {

// Lattice in characteristic coordinates xi = a*h, eta = b*h with a, b >= 0
// and a + b <= M = 2(n-1). Row a holds b = 0..M-a.
struct CharLattice {
  std::size_t M = 0, nn = 1;
  std::vector<std::size_t> row_offset;

  CharLattice(std::size_t m, std::size_t block) : M(m), nn(block), row_offset(m + 2) {
    std::size_t off = 0;
    for (std::size_t a = 0; a <= M; ++a) {
      row_offset[a] = off;
      off += M - a + 1;
    }
    row_offset[M + 1] = off;
  }
  std::size_t nodes() const { return row_offset[M + 1]; }
  std::size_t at(std::size_t a, std::size_t b) const { return (row_offset[a] + b) * nn; }
};

// out = Q * K - K * P for N x N row-major blocks.
inline void commutator_like(std::size_t n, const cplx* Q, const cplx* K, const cplx* P, cplx* out) {
  if (n == 1) {
    out[0] = Q[0] * K[0] - K[0] * P[0];
    return;
  }
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < n; ++c) {
      cplx acc{};
      for (std::size_t k = 0; k < n; ++k) acc += Q[r * n + k] * K[k * n + c] - K[r * n + k] * P[k * n + c];
      out[r * n + c] = acc;
    }
}

// Samples of a potential on the half-step grid x = k*h/2, k = 0..2(n-1).
inline std::vector<cplx> half_grid(const PotentialField& f) {
  const auto& mesh = f.mesh();
  const std::size_t nn = f.dim() * f.dim(), M = 2 * (mesh.size() - 1);
  std::vector<cplx> out((M + 1) * nn);
  for (std::size_t k = 0; k <= M; ++k) {
    if (k % 2 == 0) {
      auto s = f.node_matrix(k / 2);
      std::copy(s.begin(), s.end(), out.begin() + k * nn);
    } else {
      f.evaluate(0.5 * static_cast<double>(k) * mesh.step(), std::span<cplx>(out.data() + k * nn, nn));
    }
  }
  return out;
}

} // namespace detail

/// Solves K_xx - K_yy = Q(x)K - K P(y) on 0 <= y <= x <= ell with
/// K_y(x,0) = 0 and 2 d/dx K(x,x) = Q(x) - P(x), K(0,0) = 0.
///
/// Works on the evenly extended problem in characteristic coordinates,
///   K(xi,eta) = f(xi/2) + f(eta/2) + 1/4 int_0^xi int_0^eta (QK - KP),
/// with f(x) = 1/2 int_0^x (Q - P) computed by composite Simpson, the double
/// integral by the product trapezoid rule, and successive approximation
/// until the sup-change drops below tol.
inline TriangularKernel solve_goursat(const PotentialField& P, const PotentialField& Q, const GoursatOptions& opts = {}) {
  require_compatible(P, Q, "solve_goursat");
  if (!(opts.tol > 0.0)) throw std::invalid_argument("solve_goursat: tol must be positive");
  const std::size_t n = P.dim(), nn = n * n;
  const SpatialMesh& mesh = P.mesh();
  const std::size_t nx = mesh.size(), M = 2 * (nx - 1);
  const double h = mesh.step();

  const auto Ph = detail::half_grid(P);
  const auto Qh = detail::half_grid(Q);

  // diagonal data f on the half grid, one entry per block element
  std::vector<cplx> f((M + 1) * nn);
  {
    std::vector<cplx> d(M + 1);
    for (std::size_t e = 0; e < nn; ++e) {
      for (std::size_t k = 0; k <= M; ++k) d[k] = Qh[k * nn + e] - Ph[k * nn + e];
      const auto F = cumulative_simpson<cplx>(d, 0.5 * h);
      for (std::size_t k = 0; k <= M; ++k) f[k * nn + e] = 0.5 * F[k];
    }
  }

  detail::CharLattice lat(M, nn);
  const std::size_t total = lat.nodes() * nn;
  std::vector<cplx> data(total), K(total), F(total), G(total, cplx{});
  for (std::size_t a = 0; a <= M; ++a)
    for (std::size_t b = 0; a + b <= M; ++b)
      for (std::size_t e = 0; e < nn; ++e) data[lat.at(a, b) + e] = f[a * nn + e] + f[b * nn + e];
  K = data;

  auto eval_F = [&](std::size_t a, std::size_t b) {
    const std::size_t ab = a > b ? a - b : b - a;
    detail::commutator_like(n, &Qh[(a + b) * nn], &K[lat.at(a, b)], &Ph[ab * nn], &F[lat.at(a, b)]);
  };
  const double cell = 0.25 * h * h;
  // G(a,b) from its three lower neighbours and the four cell corners of F.
  auto accumulate = [&](std::size_t a, std::size_t b) {
    const std::size_t o = lat.at(a, b);
    if (a == 0 || b == 0) {
      for (std::size_t e = 0; e < nn; ++e) G[o + e] = cplx{};
      return;
    }
    const std::size_t o10 = lat.at(a - 1, b), o01 = lat.at(a, b - 1), o11 = lat.at(a - 1, b - 1);
    for (std::size_t e = 0; e < nn; ++e)
      G[o + e] = G[o10 + e] + G[o01 + e] - G[o11 + e] + cell * (F[o + e] + F[o10 + e] + F[o01 + e] + F[o11 + e]);
  };

  std::vector<double> history;
  bool converged = false;
  for (std::size_t it = 1; it <= opts.max_iter; ++it) {
    double change = 0.0;
    if (opts.order == SweepOrder::row_major) {
      for (std::size_t a = 0; a <= M; ++a)
        for (std::size_t b = 0; a + b <= M; ++b) eval_F(a, b);
      for (std::size_t a = 0; a <= M; ++a)
        for (std::size_t b = 0; a + b <= M; ++b) accumulate(a, b);
      for (std::size_t k = 0; k < total; ++k) {
        const cplx next = data[k] + 0.25 * G[k];
        change = std::max(change, std::abs(next - K[k]));
        K[k] = next;
      }
    } else {
      if (it == 1)
        for (std::size_t a = 0; a <= M; ++a)
          for (std::size_t b = 0; a + b <= M; ++b) eval_F(a, b);
      for (std::size_t s = 0; s <= M; ++s)
        for (std::size_t a = 0; a <= s; ++a) {
          const std::size_t b = s - a, o = lat.at(a, b);
          accumulate(a, b);
          for (std::size_t e = 0; e < nn; ++e) {
            const cplx next = data[o + e] + 0.25 * G[o + e];
            change = std::max(change, std::abs(next - K[o + e]));
            K[o + e] = next;
          }
          eval_F(a, b);
        }
    }
    history.push_back(change);
    if (!std::isfinite(change)) break;
    if (change < opts.tol) {
      converged = true;
      break;
    }
  }
  if (!converged)
    throw ConvergenceError("solve_goursat: no convergence within " + std::to_string(opts.max_iter) +
                               " sweeps (last change " + std::to_string(history.empty() ? 0.0 : history.back()) + ")",
                           history);

  TriangularKernel out(n, mesh);
  for (std::size_t i = 0; i < nx; ++i)
    for (std::size_t j = 0; j <= i; ++j) {
      const std::size_t o = lat.at(i + j, i - j);
      std::copy(K.begin() + o, K.begin() + o + nn, out.block(i, j).begin());
    }
  out.iterations = history.size();
  out.history = std::move(history);
  return out;
}

struct GoursatResidual {
  double interior_sup = 0.0; ///< |K_xx - K_yy - QK + KP| over interior nodes
  double neumann_sup = 0.0;  ///< |K_y(x,0)|
  double diagonal_sup = 0.0; ///< |2 d/dx K(x,x) - (Q - P)(x)|
};

/// Finite-difference residuals of the three Goursat conditions. Interior
/// stencils need 1 <= j <= i-1 and i <= n-2; they are skipped when the
/// triangle has too few nodes.
inline GoursatResidual goursat_residual(const TriangularKernel& K, const PotentialField& P, const PotentialField& Q) {
  require_compatible(P, Q, "goursat_residual");
  if (K.dim() != P.dim() || !(K.mesh() == P.mesh()))
    throw std::invalid_argument("goursat_residual: kernel and potentials must share system size and mesh");
  const std::size_t n = K.dim(), nn = n * n, nx = K.mesh().size();
  const double h = K.mesh().step(), ih2 = 1.0 / (h * h);
  GoursatResidual res;
  std::vector<cplx> tmp(nn);
  for (std::size_t i = 2; i + 1 < nx; ++i)
    for (std::size_t j = 1; j + 1 <= i; ++j) {
      detail::commutator_like(n, Q.node_matrix(i).data(), K.block(i, j).data(), P.node_matrix(j).data(), tmp.data());
      for (std::size_t e = 0; e < nn; ++e) {
        const std::size_t r = e / n, c = e % n;
        const cplx kxx = (K(i + 1, j, r, c) - 2.0 * K(i, j, r, c) + K(i - 1, j, r, c)) * ih2;
        const cplx kyy = (K(i, j + 1, r, c) - 2.0 * K(i, j, r, c) + K(i, j - 1, r, c)) * ih2;
        res.interior_sup = std::max(res.interior_sup, std::abs(kxx - kyy - tmp[e]));
      }
    }
  for (std::size_t i = 2; i < nx; ++i)
    for (std::size_t e = 0; e < nn; ++e) {
      const std::size_t r = e / n, c = e % n;
      const cplx ky = (-3.0 * K(i, 0, r, c) + 4.0 * K(i, 1, r, c) - K(i, 2, r, c)) / (2.0 * h);
      res.neumann_sup = std::max(res.neumann_sup, std::abs(ky));
    }
  for (std::size_t e = 0; e < nn; ++e) {
    const std::size_t r = e / n, c = e % n;
    std::vector<cplx> diag(nx);
    for (std::size_t i = 0; i < nx; ++i) diag[i] = K(i, i, r, c);
    const auto d = first_derivative<cplx>(diag, h);
    for (std::size_t i = 0; i < nx; ++i)
      res.diagonal_sup = std::max(res.diagonal_sup, std::abs(2.0 * d[i] - (Q.at(i, r, c) - P.at(i, r, c))));
  }
  return res;
}

/// Threshold on |K_y(x,0)| above which even_extend flags the source kernel.
inline constexpr double kNeumannWarnThreshold = 1e-3;

inline ExtendedKernel even_extend(const TriangularKernel& K) {
  ExtendedKernel ext(K);
  const std::size_t nx = K.mesh().size(), nn = K.dim() * K.dim();
  const double h = K.mesh().step();
  double defect = 0.0;
  for (std::size_t i = 2; i < nx; ++i)
    for (std::size_t e = 0; e < nn; ++e) {
      const std::size_t r = e / K.dim(), c = e % K.dim();
      defect = std::max(defect, std::abs((-3.0 * K(i, 0, r, c) + 4.0 * K(i, 1, r, c) - K(i, 2, r, c)) / (2.0 * h)));
    }
  ext.neumann_defect = defect;
  return ext;
}

/// Interior residual of the hyperbolic equation on {|y| < x}, including the
/// y = 0 row whose stencil crosses into the mirrored half. P is evaluated
/// at |y|.
inline double extended_residual(const ExtendedKernel& K, const PotentialField& P, const PotentialField& Q) {
  const std::size_t n = K.dim(), nn = n * n, nx = K.mesh().size();
  const double h = K.mesh().step(), ih2 = 1.0 / (h * h);
  double worst = 0.0;
  std::vector<cplx> tmp(nn);
  for (std::size_t i = 2; i + 1 < nx; ++i)
    for (long j = -static_cast<long>(i) + 1; j <= static_cast<long>(i) - 1; ++j) {
      const std::size_t aj = static_cast<std::size_t>(j < 0 ? -j : j);
      detail::commutator_like(n, Q.node_matrix(i).data(), K.source().block(i, aj).data(), P.node_matrix(aj).data(),
                              tmp.data());
      for (std::size_t e = 0; e < nn; ++e) {
        const std::size_t r = e / n, c = e % n;
        const cplx kxx = (K(i + 1, j, r, c) - 2.0 * K(i, j, r, c) + K(i - 1, j, r, c)) * ih2;
        const cplx kyy = (K(i, j + 1, r, c) - 2.0 * K(i, j, r, c) + K(i, j - 1, r, c)) * ih2;
        worst = std::max(worst, std::abs(kxx - kyy - tmp[e]));
      }
    }
  return worst;
}

/// sup |K| over the grid nodes strictly inside the light triangle
/// {x0 < x < x0 + delta, |y| < 2 x0 - x}, delta = min(x0, ell - x0).
inline double dependence_zero_check(const ExtendedKernel& K, double x0) {
  const auto& mesh = K.mesh();
  const double ell = mesh.length(), h = mesh.step();
  if (!(x0 > 0.0 && x0 < ell)) throw std::invalid_argument("dependence_zero_check: x0 must lie in (0, ell)");
  const double delta = std::min(x0, ell - x0);
  const double slack = 1e-9 * h;
  double worst = 0.0;
  std::size_t visited = 0;
  for (std::size_t i = 0; i < mesh.size(); ++i) {
    const double x = mesh.node(i);
    if (!(x > x0 + slack && x < x0 + delta - slack)) continue;
    for (long j = -static_cast<long>(i); j <= static_cast<long>(i); ++j) {
      const double y = static_cast<double>(j) * h;
      if (!(std::abs(y) < 2.0 * x0 - x - slack)) continue;
      ++visited;
      for (std::size_t r = 0; r < K.dim(); ++r)
        for (std::size_t c = 0; c < K.dim(); ++c) worst = std::max(worst, std::abs(K(i, j, r, c)));
    }
  }
  if (visited == 0)
    throw std::invalid_argument("dependence_zero_check: light triangle at x0 = " + std::to_string(x0) +
                                " contains no grid nodes (x0 too close to an end)");
  return worst;
}

/// sup|K| / eps for Q = P + eps * Delta, one entry per eps.
inline std::vector<double> kernel_linearization_ratio(const PotentialField& P, const PotentialField& Delta,
                                                      std::span<const double> eps_list, const GoursatOptions& opts = {}) {
  require_compatible(P, Delta, "kernel_linearization_ratio");
  std::vector<double> out;
  double prev = std::numeric_limits<double>::infinity();
  for (double eps : eps_list) {
    if (!(eps > 0.0) || !(eps < prev))
      throw std::invalid_argument("kernel_linearization_ratio: eps values must be positive and decreasing");
    prev = eps;
    const auto K = solve_goursat(P, axpy(P, eps, Delta), opts);
    out.push_back(K.sup_abs() / eps);
  }
  return out;
}

/// One row per triangle node: x, y, then re and im of every block entry.
inline void write_kernel_csv(std::ostream& os, const TriangularKernel& K) {
  const std::size_t n = K.dim();
  os << "x,y";
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < n; ++c) os << ",re_k_" << r + 1 << c + 1;
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < n; ++c) os << ",im_k_" << r + 1 << c + 1;
  os << '\n';
  const auto& mesh = K.mesh();
  const auto old = os.precision(17);
  for (std::size_t i = 0; i < mesh.size(); ++i)
    for (std::size_t j = 0; j <= i; ++j) {
      os << mesh.node(i) << ',' << mesh.node(j);
      for (const auto& v : K.block(i, j)) os << ',' << v.real();
      for (const auto& v : K.block(i, j)) os << ',' << v.imag();
      os << '\n';
    }
  os.precision(old);
}

} // namespace transop
