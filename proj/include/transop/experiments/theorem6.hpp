#pragma once

#include <limits>
#include <string>
#include <vector>

#include "transop/evolution.hpp"
#include "transop/experiments/common.hpp"
#include "transop/experiments/parallel.hpp"
#include "transop/goursat.hpp"

namespace transop::experiments {

/// P = Q near x = 0 only. The kernel for the shifted potentials
/// P(eta + eps0 - x0), Q(eta + eps0 - x0) on [0, ell - eps0 + x0] must vanish
/// on the light triangle above x0; its discrete sup is followed under
/// refinement. Trace sensitivity with both Cauchy traces is observational.
inline ScenarioReport run_theorem6(const ExperimentConfig& cfg, const RunOptions& opt = {}) {
  ScenarioReport rep("theorem6_known_near_zero");
  const std::size_t N = cfg.N;
  const double ell = cfg.grid.ell;
  const int levels = cfg.grid.levels;
  const double eps0 = cfg.data_number("eps0", std::numeric_limits<double>::quiet_NaN());
  if (!(eps0 > 0.0)) throw ConfigError("data.eps0", "must be a positive number (P = Q is required on (0, eps0))");
  if (!(eps0 < ell)) throw ConfigError("data.eps0", "must be smaller than ell");
  const double x0 = cfg.data_number("x0", 0.8 * eps0);
  if (!(x0 > 0.0)) throw ConfigError("data.x0", "must be positive");
  const double min_order = cfg.threshold("min_order", 1.7);
  const bool hypothesis = x0 < eps0;
  if (!hypothesis)
    rep.warn("x0 = " + std::to_string(x0) + " >= eps0 = " + std::to_string(eps0) +
             ": the light-triangle argument does not apply; results are observational only");

  const auto Pf = cfg.potential("P");
  const auto Qf = cfg.potential("Q");
  {
    const auto [xm, tm] = cfg.grid.meshes(0);
    double gap = 0.0;
    for (std::size_t i = 0; i < xm.size() && xm.node(i) < eps0; ++i)
      gap = std::max(gap, max_abs_diff(Pf(xm.node(i)).a, Qf(xm.node(i)).a));
    rep.metric("sup_abs_P_minus_Q_below_eps0", gap);
    if (gap > 1e-12) rep.warn("P and Q differ on (0, eps0); the known-near-zero hypothesis is not met");
  }

  const double shift = eps0 - x0;
  const double ell_shifted = ell - shift;
  auto shifted = [&](const MatrixFunction& f) {
    MatrixFunction g = f;
    for (auto& e : g.entries) e = [inner = e, shift](double eta) { return inner(eta + shift); };
    return g;
  };
  const auto Ps = shifted(Pf), Qs = shifted(Qf);
  rep.metric("shifted_length", ell_shifted);
  rep.metric("x0", x0);
  rep.metric("eps0", eps0);

  struct Level {
    double h = 0.0, sup = 0.0, neumann_defect = 0.0;
  };
  auto lv = parallel_map(static_cast<std::size_t>(levels), opt.threads, [&](std::size_t l) {
    const std::size_t n = (cfg.grid.n_x - 1) * (std::size_t{1} << l) + 1;
    const SpatialMesh xm(ell_shifted, n);
    const auto K = solve_goursat(sample_potential(Ps, xm), sample_potential(Qs, xm));
    const auto ext = even_extend(K);
    return Level{xm.step(), dependence_zero_check(ext, x0), ext.neumann_defect};
  });
  ConvergenceStudy st;
  for (int l = 0; l < levels; ++l) {
    rep.add_grid(ell_shifted, cfg.grid.T, (cfg.grid.n_x - 1) * (std::size_t{1} << l) + 1, 0,
                 "shifted_kernel_level_" + std::to_string(l));
    st.h.push_back(lv[l].h);
    st.errors.push_back(lv[l].sup);
    rep.metric("neumann_defect_level" + std::to_string(l), lv[l].neumann_defect);
  }
  if (hypothesis) {
    assert_convergence(rep, "light_triangle_sup", st, min_order);
  } else {
    rep.table("light_triangle_sup", st.table("error"));
    for (int l = 0; l < levels; ++l) rep.metric("light_triangle_sup.error_level" + std::to_string(l), st.errors[l]);
  }

  // Both Cauchy traces as data: same initial profile and left flux, compare u(t,0).
  if (cfg.has_data("initial")) {
    const auto [xm, tm] = cfg.grid.meshes(0);
    rep.add_grid(ell, cfg.grid.T, xm.size(), tm.size(), "trace_sensitivity");
    const auto profiles = cfg.initial_profiles();
    const auto a = profiles.at(0).sample(xm);
    FluxData flux;
    flux.values = cfg.has_data("flux") ? cfg.data_vector("flux").sample(tm) : std::vector<cplx>(tm.size() * N);
    const BoundarySpec bc{flux, parse_right_boundary(cfg, tm)};
    auto runs = parallel_map(2, opt.threads, [&](std::size_t k) {
      return solve_forward(cfg.sigma, sample_potential(k == 0 ? Pf : Qf, xm), std::nullopt, a, bc, tm);
    });
    const auto tp = extract_traces(runs[0]), tq = extract_traces(runs[1]);
    rep.metric("trace_discrepancy_value", max_abs_diff(tp.left_value, tq.left_value));
    rep.metric("trace_discrepancy_flux", max_abs_diff(tp.left_flux, tq.left_flux));
    rep.note("trace_sensitivity", "value and flux traces at x = 0 are both supplied; reported without assertion");
    Table traces = time_axis(tm);
    append_series_columns(traces, "u_P", tp.left_value, N);
    append_series_columns(traces, "u_Q", tq.left_value, N);
    rep.series("traces", traces);
    rep.plot({"traces.svg", "traces", "x = 0 traces under P and Q", {N > 1 ? "re_u_P1" : "re_u_P", N > 1 ? "re_u_Q1" : "re_u_Q"}, false});
  }
  return rep;
}

} // namespace transop::experiments
