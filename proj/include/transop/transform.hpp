#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "transop/field.hpp"
#include "transop/goursat.hpp"
#include "transop/numerics.hpp"

namespace transop {

/// v(t,x) = u(t,x) + int_0^x K(x,y) u(t,y) dy, integral by composite Simpson
/// over the nodes y_0..y_i (3/8 closure on odd prefixes, trapezoid for one
/// interval). The row x = 0 is copied untouched.
inline SolutionField apply_kernel(const TriangularKernel& K, const SolutionField& u) {
  if (K.dim() != u.dim() || !(K.mesh() == u.x_mesh()))
    throw std::invalid_argument("apply_kernel: kernel and field must share system size and spatial mesh");
  const std::size_t N = u.dim(), nx = u.x_mesh().size(), nt = u.t_mesh().size();
  const double h = u.x_mesh().step();
  SolutionField v = u;
  std::vector<cplx> integrand(nx);
  for (std::size_t j = 0; j < nt; ++j) {
    auto src = u.slice(j);
    auto dst = v.slice(j);
    for (std::size_t i = 1; i < nx; ++i) {
      for (std::size_t r = 0; r < N; ++r) {
        for (std::size_t y = 0; y <= i; ++y) {
          auto blk = K.block(i, y);
          cplx acc{};
          for (std::size_t c = 0; c < N; ++c) acc += blk[r * N + c] * src[y * N + c];
          integrand[y] = acc;
        }
        dst[i * N + r] += simpson_integral<cplx>(std::span<const cplx>(integrand.data(), i + 1), h);
      }
    }
  }
  return v;
}

/// sup over interior nodes (one layer dropped on every side) of
/// |sigma v_t - v_xx + Q v - s(t,x)| with centered differences, where the
/// optional source s is given at every node (level-major, like v).
inline double equation_residual(cplx sigma, const PotentialField& Q, const SolutionField& v,
                                std::span<const cplx> source = {}) {
  if (Q.dim() != v.dim() || !(Q.mesh() == v.x_mesh()))
    throw std::invalid_argument("equation_residual: potential and field must share system size and mesh");
  const std::size_t N = v.dim(), nx = v.x_mesh().size(), nt = v.t_mesh().size();
  if (!source.empty() && source.size() != v.values().size())
    throw std::invalid_argument("equation_residual: source has wrong size");
  if (nt < 3) throw std::invalid_argument("equation_residual: need at least 3 time levels");
  const double h = v.x_mesh().step(), dt = v.t_mesh().step();
  double worst = 0.0;
  for (std::size_t j = 1; j + 1 < nt; ++j)
    for (std::size_t i = 1; i + 1 < nx; ++i) {
      auto q = Q.node_matrix(i);
      for (std::size_t r = 0; r < N; ++r) {
        const cplx vt = (v(j + 1, i, r) - v(j - 1, i, r)) / (2.0 * dt);
        const cplx vxx = (v(j, i + 1, r) - 2.0 * v(j, i, r) + v(j, i - 1, r)) / (h * h);
        cplx qv{};
        for (std::size_t c = 0; c < N; ++c) qv += q[r * N + c] * v(j, i, c);
        cplx res = sigma * vt - vxx + qv;
        if (!source.empty()) res -= source[(j * nx + i) * N + r];
        worst = std::max(worst, std::abs(res));
      }
    }
  return worst;
}

/// (-3 u_0 + 4 u_1 - u_2) / 2h at every time level, component c.
inline std::vector<cplx> left_flux_series(const SolutionField& u, std::size_t c = 0) {
  const double h = u.x_mesh().step();
  std::vector<cplx> out(u.t_mesh().size());
  for (std::size_t j = 0; j < out.size(); ++j) out[j] = (-3.0 * u(j, 0, c) + 4.0 * u(j, 1, c) - u(j, 2, c)) / (2.0 * h);
  return out;
}

/// Residual of sigma v_t - v_xx + Q v = -K(x,0) u_x(t,0) for v = apply_kernel(K, u).
inline double lemma2_residual(cplx sigma, const PotentialField& Q, const TriangularKernel& K, const SolutionField& u) {
  const SolutionField v = apply_kernel(K, u);
  const std::size_t N = u.dim(), nx = u.x_mesh().size(), nt = u.t_mesh().size();
  std::vector<std::vector<cplx>> flux(N);
  for (std::size_t c = 0; c < N; ++c) flux[c] = left_flux_series(u, c);
  std::vector<cplx> source(v.values().size());
  for (std::size_t j = 0; j < nt; ++j)
    for (std::size_t i = 0; i < nx; ++i) {
      auto blk = K.block(i, 0);
      for (std::size_t r = 0; r < N; ++r) {
        cplx acc{};
        for (std::size_t c = 0; c < N; ++c) acc += blk[r * N + c] * flux[c][j];
        source[(j * nx + i) * N + r] = -acc;
      }
    }
  return equation_residual(sigma, Q, v, source);
}

namespace detail {

inline void require_scalar_drift(const PotentialField& r, const char* where) {
  if (r.dim() != 1) throw std::invalid_argument(std::string(where) + ": drift must be scalar (N = 1)");
}

} // namespace detail

/// R(x) = -1/2 int_0^x r, by cumulative Simpson.
inline std::vector<cplx> gauge_exponent(const PotentialField& r) {
  detail::require_scalar_drift(r, "gauge_exponent");
  auto R = cumulative_simpson<cplx>(r.samples(), r.mesh().step());
  for (auto& v : R) v *= -0.5;
  return R;
}

/// W(t,x) = exp(R(x)) u(t,x).
inline SolutionField gauge_transform(const PotentialField& r, const SolutionField& u) {
  detail::require_scalar_drift(r, "gauge_transform");
  if (u.dim() != 1) throw std::invalid_argument("gauge_transform: field must be scalar (N = 1)");
  if (!(r.mesh() == u.x_mesh())) throw std::invalid_argument("gauge_transform: drift and field meshes differ");
  const auto R = gauge_exponent(r);
  SolutionField w = u;
  for (std::size_t j = 0; j < u.t_mesh().size(); ++j)
    for (std::size_t i = 0; i < u.x_mesh().size(); ++i) w(j, i) *= std::exp(R[i]);
  return w;
}

/// P + r^2/4 - r'/2 with r' by centered differences (one-sided at the ends).
inline PotentialField effective_potential(const PotentialField& P, const PotentialField& r) {
  detail::require_scalar_drift(r, "effective_potential");
  if (P.dim() != 1) throw std::invalid_argument("effective_potential: potential must be scalar (N = 1)");
  if (!(P.mesh() == r.mesh())) throw std::invalid_argument("effective_potential: meshes differ");
  const auto dr = first_derivative<cplx>(r.samples(), r.mesh().step());
  std::vector<cplx> s(P.samples().begin(), P.samples().end());
  for (std::size_t i = 0; i < s.size(); ++i) s[i] += 0.25 * r.samples()[i] * r.samples()[i] - 0.5 * dr[i];
  return PotentialField(1, P.mesh(), std::move(s));
}

} // namespace transop
