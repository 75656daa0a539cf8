#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <type_traits>
#include <optional>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "transop/field.hpp"
#include "transop/numerics.hpp"

namespace transop {

/// Nonzero complex coefficient of the time derivative.
class EvolutionCoefficient {
public:
  EvolutionCoefficient(cplx sigma) : s_(sigma) { // NOLINT: implicit on purpose
    if (!(std::abs(sigma) > 0.0)) throw std::invalid_argument("EvolutionCoefficient: sigma must be nonzero");
  }
  EvolutionCoefficient(double sigma) : EvolutionCoefficient(cplx(sigma)) {} // NOLINT
  cplx value() const { return s_; }
  /// Re sigma < 0, or purely imaginary other than +i: no stability claim.
  bool unstable_regime() const { return s_.real() < 0.0 || (s_.real() == 0.0 && s_ != cplx(0.0, 1.0)); }

private:
  cplx s_;
};

/// Boundary data are time series on the TimeMesh, one N-vector per level
/// (level-major). An empty series means zero data.
struct BoundaryData {
  std::vector<cplx> values;
  cplx at(std::size_t j, std::size_t c, std::size_t dim) const { return values.empty() ? cplx{} : values[j * dim + c]; }
};

struct NeumannZero {};
/// Prescribed flux u_x(t,0) = phi(t). This is how a left end with no
/// Neumann-zero constraint ("Cauchy-free") is closed for a forward solve.
struct FluxData : BoundaryData {};
struct DirichletData : BoundaryData {};

using LeftBoundary = std::variant<NeumannZero, FluxData, DirichletData>;
using RightBoundary = std::variant<NeumannZero, DirichletData>;

struct BoundarySpec {
  LeftBoundary left = NeumannZero{};
  RightBoundary right = NeumannZero{};

  std::string describe() const {
    std::string l = std::holds_alternative<NeumannZero>(left) ? "neumann_zero"
                    : std::holds_alternative<FluxData>(left) ? "flux"
                                                             : "dirichlet";
    std::string r = std::holds_alternative<NeumannZero>(right) ? "neumann_zero" : "dirichlet";
    return "left=" + l + ", right=" + r;
  }
};

namespace detail {

inline void check_series(const BoundaryData& d, std::size_t n_t, std::size_t dim, const char* which) {
  if (d.values.empty()) return;
  if (d.values.size() != n_t * dim)
    throw std::invalid_argument(std::string("solve_forward: ") + which + " boundary series has wrong length");
  for (const auto& v : d.values)
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
      throw std::invalid_argument(std::string("solve_forward: ") + which + " boundary series not finite");
}

// Block tridiagonal system with scalar off-diagonals, factored once.
struct BlockTridiagonal {
  std::size_t n = 0, dim = 1;
  std::vector<cplx> lower, upper;  // scalar coefficients per row
  std::vector<cplx> inv_pivot;     // dim x dim per row

  void factor(const std::vector<cplx>& diag_blocks) {
    using Mat = Eigen::MatrixXcd;
    inv_pivot.assign(n * dim * dim, cplx{});
    Mat prev_inv;
    for (std::size_t i = 0; i < n; ++i) {
      Mat D = Eigen::Map<const Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
          diag_blocks.data() + i * dim * dim, dim, dim);
      if (i > 0) D -= lower[i] * upper[i - 1] * prev_inv;
      Eigen::FullPivLU<Mat> lu(D);
      if (!lu.isInvertible() || !std::isfinite(std::abs(D.determinant())) || std::abs(D.determinant()) < 1e-300)
        throw std::runtime_error("solve_forward: singular Crank-Nicolson system at row " + std::to_string(i));
      prev_inv = lu.inverse();
      Eigen::Map<Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(inv_pivot.data() + i * dim * dim,
                                                                                     dim, dim) = prev_inv;
    }
  }

  // Solves in place; rhs holds n blocks of dim entries.
  void solve(std::span<cplx> rhs, std::vector<cplx>& work) const {
    work.resize(dim);
    auto mul = [&](std::size_t i, const cplx* v, cplx* out) {
      const cplx* A = inv_pivot.data() + i * dim * dim;
      if (dim == 1) {
        out[0] = A[0] * v[0];
        return;
      }
      for (std::size_t r = 0; r < dim; ++r) {
        cplx acc{};
        for (std::size_t c = 0; c < dim; ++c) acc += A[r * dim + c] * v[c];
        out[r] = acc;
      }
    };
    for (std::size_t i = 0; i < n; ++i) {
      cplx* b = rhs.data() + i * dim;
      if (i > 0)
        for (std::size_t c = 0; c < dim; ++c) b[c] -= lower[i] * rhs[(i - 1) * dim + c];
      mul(i, b, work.data());
      std::copy(work.begin(), work.end(), b);
    }
    for (std::size_t i = n - 1; i-- > 0;) {
      cplx* b = rhs.data() + i * dim;
      for (std::size_t c = 0; c < dim; ++c) work[c] = upper[i] * rhs[(i + 1) * dim + c];
      std::vector<cplx> t(dim);
      mul(i, work.data(), t.data());
      for (std::size_t c = 0; c < dim; ++c) b[c] -= t[c];
    }
  }
};

} // namespace detail

/// Crank-Nicolson solve of sigma u_t = u_xx - r(x) u_x - P(x) u on the given
/// meshes, with ghost-node Neumann/flux closures and Dirichlet rows.
///
/// `initial` holds n_x * N values (node-major). `drift`, when present, must
/// be a scalar field (N = 1).
inline SolutionField solve_forward(const EvolutionCoefficient& sigma, const PotentialField& P,
                                   const std::optional<PotentialField>& drift, std::span<const cplx> initial,
                                   const BoundarySpec& bc, const TimeMesh& t_mesh) {
  const std::size_t N = P.dim();
  const SpatialMesh& xm = P.mesh();
  const std::size_t nx = xm.size(), nt = t_mesh.size();
  if (initial.size() != nx * N) throw std::invalid_argument("solve_forward: initial profile has wrong length");
  if (drift) {
    if (drift->dim() != 1) throw std::invalid_argument("solve_forward: drift must be scalar");
    if (N != 1) throw std::invalid_argument("solve_forward: drift is only supported for N = 1");
    if (!(drift->mesh() == xm)) throw std::invalid_argument("solve_forward: drift mesh differs from potential mesh");
  }
  std::visit([&](const auto& b) {
    if constexpr (!std::is_same_v<std::decay_t<decltype(b)>, NeumannZero>) detail::check_series(b, nt, N, "left");
  }, bc.left);
  std::visit([&](const auto& b) {
    if constexpr (!std::is_same_v<std::decay_t<decltype(b)>, NeumannZero>) detail::check_series(b, nt, N, "right");
  }, bc.right);

  SolutionField u(N, t_mesh, xm);
  if (sigma.unstable_regime())
    u.warnings.push_back("sigma = (" + std::to_string(sigma.value().real()) + ", " +
                         std::to_string(sigma.value().imag()) + ") lies outside the stable regime; no stability claim");
  std::copy(initial.begin(), initial.end(), u.slice(0).begin());

  const double h = xm.step(), dt = t_mesh.step(), ih2 = 1.0 / (h * h);
  const cplx s = sigma.value();
  const bool left_dirichlet = std::holds_alternative<DirichletData>(bc.left);
  const bool right_dirichlet = std::holds_alternative<DirichletData>(bc.right);
  const FluxData* left_flux = std::get_if<FluxData>(&bc.left);

  // Spatial operator L u = a_i u_{i-1} + D_i u_i + c_i u_{i+1} (+ boundary source).
  std::vector<cplx> a(nx), c(nx);
  std::vector<cplx> D(nx * N * N);
  auto r_at = [&](std::size_t i) { return drift ? drift->at(i, 0, 0) : cplx{}; };
  for (std::size_t i = 0; i < nx; ++i) {
    const cplx r = r_at(i);
    a[i] = ih2 + r / (2.0 * h);
    c[i] = ih2 - r / (2.0 * h);
    for (std::size_t e = 0; e < N * N; ++e) D[i * N * N + e] = -P.node_matrix(i)[e];
    for (std::size_t k = 0; k < N; ++k) D[(i * N + k) * N + k] += -2.0 * ih2;
  }
  // ghost u_{-1} = u_1 - 2 h phi  =>  row 0 couples to u_1 with weight 2/h^2
  a[0] = 0.0;
  c[0] = 2.0 * ih2;
  // ghost u_n = u_{n-2}
  c[nx - 1] = 0.0;
  a[nx - 1] = 2.0 * ih2;
  auto left_source = [&](std::size_t j, std::size_t comp) -> cplx {
    if (!left_flux) return {};
    const cplx phi = left_flux->at(j, comp, N);
    return -2.0 * phi / h - r_at(0) * phi;
  };

  auto apply_L = [&](std::span<const cplx> v, std::size_t i, std::size_t comp) {
    cplx acc{};
    for (std::size_t k = 0; k < N; ++k) acc += D[(i * N + comp) * N + k] * v[i * N + k];
    if (i > 0) acc += a[i] * v[(i - 1) * N + comp];
    if (i + 1 < nx) acc += c[i] * v[(i + 1) * N + comp];
    return acc;
  };

  detail::BlockTridiagonal sys;
  sys.n = nx;
  sys.dim = N;
  sys.lower.resize(nx);
  sys.upper.resize(nx);
  std::vector<cplx> diag(nx * N * N);
  const double half = 0.5 * dt;
  for (std::size_t i = 0; i < nx; ++i) {
    const bool dir_row = (i == 0 && left_dirichlet) || (i + 1 == nx && right_dirichlet);
    if (dir_row) {
      sys.lower[i] = 0.0;
      sys.upper[i] = 0.0;
      for (std::size_t k = 0; k < N; ++k) diag[(i * N + k) * N + k] = 1.0;
      continue;
    }
    sys.lower[i] = -half * a[i];
    sys.upper[i] = -half * c[i];
    for (std::size_t e = 0; e < N * N; ++e) diag[i * N * N + e] = -half * D[i * N * N + e];
    for (std::size_t k = 0; k < N; ++k) diag[(i * N + k) * N + k] += s;
  }
  sys.factor(diag);

  std::vector<cplx> rhs(nx * N), work;
  for (std::size_t j = 0; j + 1 < nt; ++j) {
    auto cur = u.slice(j);
    for (std::size_t i = 0; i < nx; ++i)
      for (std::size_t k = 0; k < N; ++k) {
        cplx v = s * cur[i * N + k] + half * apply_L(cur, i, k);
        if (i == 0) v += half * (left_source(j, k) + left_source(j + 1, k));
        rhs[i * N + k] = v;
      }
    if (left_dirichlet) {
      const auto& d = std::get<DirichletData>(bc.left);
      for (std::size_t k = 0; k < N; ++k) rhs[k] = d.at(j + 1, k, N);
    }
    if (right_dirichlet) {
      const auto& d = std::get<DirichletData>(bc.right);
      for (std::size_t k = 0; k < N; ++k) rhs[(nx - 1) * N + k] = d.at(j + 1, k, N);
    }
    sys.solve(rhs, work);
    std::copy(rhs.begin(), rhs.end(), u.slice(j + 1).begin());
  }
  if (!u.all_finite()) throw std::runtime_error("solve_forward: solution blew up (non-finite values)");
  return u;
}

/// Left Cauchy data and the two spatial slices at t = 0 and t = T.
struct TraceSet {
  std::size_t dim = 1;
  TimeMesh t_mesh;
  SpatialMesh x_mesh;
  std::vector<cplx> left_value; ///< u(t_j, 0), level-major N-vectors
  std::vector<cplx> left_flux;  ///< (-3u_0 + 4u_1 - u_2) / 2h
  std::vector<cplx> initial;    ///< u(0, x_i), node-major N-vectors
  std::vector<cplx> final;      ///< u(T, x_i)

  std::vector<cplx> value_series(std::size_t c = 0) const { return component(left_value, c); }
  std::vector<cplx> flux_series(std::size_t c = 0) const { return component(left_flux, c); }

private:
  std::vector<cplx> component(const std::vector<cplx>& v, std::size_t c) const {
    std::vector<cplx> out(v.size() / dim);
    for (std::size_t j = 0; j < out.size(); ++j) out[j] = v[j * dim + c];
    return out;
  }
};

inline TraceSet extract_traces(const SolutionField& u) {
  TraceSet tr;
  tr.dim = u.dim();
  tr.t_mesh = u.t_mesh();
  tr.x_mesh = u.x_mesh();
  const std::size_t N = u.dim(), nt = u.t_mesh().size();
  const double h = u.x_mesh().step();
  tr.left_value.resize(nt * N);
  tr.left_flux.resize(nt * N);
  for (std::size_t j = 0; j < nt; ++j)
    for (std::size_t c = 0; c < N; ++c) {
      tr.left_value[j * N + c] = u(j, 0, c);
      tr.left_flux[j * N + c] = (-3.0 * u(j, 0, c) + 4.0 * u(j, 1, c) - u(j, 2, c)) / (2.0 * h);
    }
  auto first = u.slice(0), last = u.slice(nt - 1);
  tr.initial.assign(first.begin(), first.end());
  tr.final.assign(last.begin(), last.end());
  return tr;
}

/// CSV with t, then re/im of each component of left_value and left_flux.
inline void write_time_traces_csv(std::ostream& os, const TraceSet& tr) {
  os << "t";
  for (std::size_t c = 0; c < tr.dim; ++c) os << ",re_u" << c + 1 << ",im_u" << c + 1;
  for (std::size_t c = 0; c < tr.dim; ++c) os << ",re_ux" << c + 1 << ",im_ux" << c + 1;
  os << '\n';
  const auto old = os.precision(17);
  for (std::size_t j = 0; j < tr.t_mesh.size(); ++j) {
    os << tr.t_mesh.node(j);
    for (std::size_t c = 0; c < tr.dim; ++c) os << ',' << tr.left_value[j * tr.dim + c].real() << ',' << tr.left_value[j * tr.dim + c].imag();
    for (std::size_t c = 0; c < tr.dim; ++c) os << ',' << tr.left_flux[j * tr.dim + c].real() << ',' << tr.left_flux[j * tr.dim + c].imag();
    os << '\n';
  }
  os.precision(old);
}

/// CSV with x, then re/im of each component of the initial and final slices.
inline void write_space_traces_csv(std::ostream& os, const TraceSet& tr) {
  os << "x";
  for (std::size_t c = 0; c < tr.dim; ++c) os << ",re_init" << c + 1 << ",im_init" << c + 1;
  for (std::size_t c = 0; c < tr.dim; ++c) os << ",re_final" << c + 1 << ",im_final" << c + 1;
  os << '\n';
  const auto old = os.precision(17);
  for (std::size_t i = 0; i < tr.x_mesh.size(); ++i) {
    os << tr.x_mesh.node(i);
    for (std::size_t c = 0; c < tr.dim; ++c) os << ',' << tr.initial[i * tr.dim + c].real() << ',' << tr.initial[i * tr.dim + c].imag();
    for (std::size_t c = 0; c < tr.dim; ++c) os << ',' << tr.final[i * tr.dim + c].real() << ',' << tr.final[i * tr.dim + c].imag();
    os << '\n';
  }
  os.precision(old);
}

/// B(x_i) = (u^1(0,x_i) ... u^N(0,x_i)) and min_i |det B(x_i)|.
struct InitialDataMatrix {
  std::size_t dim = 1;
  std::size_t n_x = 0;
  std::vector<cplx> B; ///< per node, N x N row-major; column k is profile k
  double min_abs_det = 0.0;
  std::size_t argmin = 0;
};

/// profiles[k] holds n_x * N values (node-major) for experiment k.
inline InitialDataMatrix det_condition(std::span<const std::vector<cplx>> profiles) {
  const std::size_t N = profiles.size();
  if (N == 0) throw std::invalid_argument("det_condition: need at least one profile");
  const std::size_t len = profiles[0].size();
  if (len % N != 0) throw std::invalid_argument("det_condition: profile length is not a multiple of N");
  for (const auto& p : profiles)
    if (p.size() != len) throw std::invalid_argument("det_condition: profiles differ in length");
  InitialDataMatrix out;
  out.dim = N;
  out.n_x = len / N;
  out.B.resize(out.n_x * N * N);
  out.min_abs_det = std::numeric_limits<double>::infinity();
  Eigen::MatrixXcd M(N, N);
  for (std::size_t i = 0; i < out.n_x; ++i) {
    for (std::size_t r = 0; r < N; ++r)
      for (std::size_t k = 0; k < N; ++k) {
        M(r, k) = profiles[k][i * N + r];
        out.B[(i * N + r) * N + k] = M(r, k);
      }
    const double d = std::abs(M.determinant());
    if (d < out.min_abs_det) {
      out.min_abs_det = d;
      out.argmin = i;
    }
  }
  return out;
}

/// Smallest m with |d^m f/dt^m (0)| above threshold, plus R = d^m f/dt^m
/// and its time derivative on the whole mesh.
struct BoundarySignal {
  int m = 0;
  std::vector<cplx> R;
  std::vector<cplx> R_prime;
  std::vector<double> derivative_magnitudes; ///< |d^k f(0)| for k = 0..m
};

struct Flat {
  std::vector<double> derivative_magnitudes; ///< |d^k f(0)| for k = 0..m_max
};

inline constexpr double kFlatnessThreshold = 1e-8;

/// The threshold is relative to max|f| / T^k so that it is independent of
/// the time unit.
inline std::variant<BoundarySignal, Flat> flatness_order(std::span<const cplx> series, const TimeMesh& t_mesh,
                                                         double threshold = kFlatnessThreshold, int m_max = 6) {
  if (series.size() != t_mesh.size()) throw std::invalid_argument("flatness_order: series does not match the mesh");
  if (m_max < 0) throw std::invalid_argument("flatness_order: m_max must be non-negative");
  if (series.size() < static_cast<std::size_t>(m_max) + 5)
    throw std::invalid_argument("flatness_order: series too short for derivative order " + std::to_string(m_max));
  const double dt = t_mesh.step(), T = t_mesh.horizon();
  const double scale = max_abs(series);
  std::vector<double> mags;
  for (int m = 0; m <= m_max; ++m) {
    const double d = std::abs(derivative_at_start<cplx>(series, dt, m));
    mags.push_back(d);
    if (scale > 0.0 && d > threshold * scale / std::pow(T, m)) {
      BoundarySignal sig;
      sig.m = m;
      sig.R = series_derivative<cplx>(series, dt, m);
      sig.R_prime = series_derivative<cplx>(sig.R, dt, 1);
      sig.derivative_magnitudes = std::move(mags);
      return sig;
    }
  }
  return Flat{std::move(mags)};
}

} // namespace transop
