#pragma once

#include <string>
#include <variant>
#include <vector>

#include "transop/evolution.hpp"
#include "transop/experiments/common.hpp"
#include "transop/experiments/parallel.hpp"
#include "transop/goursat.hpp"
#include "transop/transform.hpp"

namespace transop::experiments {

/// Zero initial data driven by a boundary input that is flat at t = 0:
/// u under P and v = u + int K u (a Q-solution) share the x = 0 traces
/// although P != Q.
inline ScenarioReport run_remark_counterexample(const ExperimentConfig& cfg, const RunOptions& opt = {}) {
  ScenarioReport rep("remark_counterexample");
  const std::size_t N = cfg.N;
  const cplx sigma = cfg.sigma;
  const auto Pf = cfg.potential("P");
  const auto Qf = cfg.potential("Q");
  json g_spec = cfg.has_data("g") ? cfg.data["g"] : json{{"type", "flat_exp"}};
  const auto g = parse_vector_function(g_spec, N, "data.g", cfg.spec_context());
  const double noise_factor = cfg.threshold("noise_factor", 10.0);
  const double min_order = cfg.threshold("min_order", 1.7);
  const double min_gap = cfg.threshold("min_potential_gap", 1.0);
  const int levels = cfg.grid.levels;

  {
    const auto [xm, tm] = cfg.grid.meshes(0);
    const auto gs = g.sample(tm);
    for (std::size_t c = 0; c < N; ++c) {
      std::vector<cplx> comp(tm.size());
      for (std::size_t j = 0; j < tm.size(); ++j) comp[j] = gs[j * N + c];
      const auto f = flatness_order(comp, tm);
      if (const auto* sig = std::get_if<BoundarySignal>(&f))
        throw ConfigError("data.g", "boundary input is not flat at t = 0: derivative of order " + std::to_string(sig->m) +
                                        " is nonzero, so the counterexample does not apply");
    }
  }

  struct Level {
    double h = 0.0;
    double residual = 0.0;
    double value_gap = 0.0;
    double gap_norm = 0.0;
    std::vector<cplx> u_trace, q_trace, flux;
    std::vector<std::string> warnings;
  };
  // One extra level beyond the study supplies the noise floor of the finest
  // base grid; only level 0 and 1 are needed for that.
  auto runs = parallel_map(static_cast<std::size_t>(std::max(levels, 2)), opt.threads, [&](std::size_t lvl) {
    const auto [xm, tm] = cfg.grid.meshes(static_cast<int>(lvl));
    const auto P = sample_potential(Pf, xm), Q = sample_potential(Qf, xm);
    Level out;
    out.h = xm.step();
    DirichletData right;
    right.values = g.sample(tm);
    const auto u = solve_forward(sigma, P, std::nullopt, std::vector<cplx>(xm.size() * N), {NeumannZero{}, right}, tm);
    out.warnings = u.warnings;
    const auto K = solve_goursat(P, Q);
    const auto v = apply_kernel(K, u);
    out.residual = equation_residual(sigma, Q, v);
    out.value_gap = max_abs_diff(extract_traces(v).left_value, extract_traces(u).left_value);
    out.gap_norm = axpy(P, -1.0, Q).sup_norm();
    // An independent Q-solve fed with v's right-end values.
    DirichletData vr;
    vr.values.resize(tm.size() * N);
    for (std::size_t j = 0; j < tm.size(); ++j)
      for (std::size_t c = 0; c < N; ++c) vr.values[j * N + c] = v(j, xm.size() - 1, c);
    const auto uq = solve_forward(sigma, Q, std::nullopt, std::vector<cplx>(xm.size() * N), {NeumannZero{}, vr}, tm);
    const auto tu = extract_traces(u);
    out.u_trace = tu.left_value;
    out.flux = tu.left_flux;
    out.q_trace = extract_traces(uq).left_value;
    return out;
  });
  for (int l = 0; l < std::max(levels, 2); ++l) {
    const auto [xm, tm] = cfg.grid.meshes(l);
    rep.add_grid(cfg.grid.ell, cfg.grid.T, xm.size(), tm.size(), l == 0 ? "base" : "refined_" + std::to_string(l));
  }
  for (const auto& w : runs[0].warnings) rep.warn(w);

  const auto [xm, tm] = cfg.grid.meshes(0);
  rep.check_le("value_trace_identity", runs[0].value_gap, 0.0, "v(t,0) = u(t,0) bit for bit");
  rep.metric("sup_abs_P_minus_Q", runs[0].gap_norm);
  rep.check_ge("potential_gap", runs[0].gap_norm, min_gap - 1e-12);

  const double noise = trace_gap(runs[0].u_trace, runs[1].u_trace, N, 2);
  const double mismatch = max_abs_diff(runs[0].q_trace, runs[0].u_trace);
  rep.metric("noise_floor", noise);
  rep.metric("trace_mismatch", mismatch);
  rep.check_le("trace_mismatch_over_noise", noise > 0 ? mismatch / noise : (mismatch > 0 ? 1e300 : 0.0), noise_factor,
               "Q-solve driven by v(t, ell) against the P-trace");

  ConvergenceStudy st;
  for (int l = 0; l < levels; ++l) {
    st.h.push_back(runs[l].h);
    st.errors.push_back(runs[l].residual);
  }
  assert_convergence(rep, "homogeneous_Q_residual", st, min_order);

  bool flat = true;
  int found = -1;
  for (std::size_t c = 0; c < N; ++c) {
    std::vector<cplx> comp(tm.size());
    for (std::size_t j = 0; j < tm.size(); ++j) comp[j] = runs[0].flux[j * N + c];
    const auto f = flatness_order(comp, tm);
    if (const auto* sig = std::get_if<BoundarySignal>(&f)) {
      flat = false;
      found = sig->m;
    }
  }
  rep.metric("flux_flatness_order", found);
  rep.check_true("flux_is_flat", flat, "no finite order m with nonzero d^m/dt^m of the x = 0 flux");

  Table traces = time_axis(tm);
  append_series_columns(traces, "u_P", runs[0].u_trace, N);
  append_series_columns(traces, "u_Q", runs[0].q_trace, N);
  rep.series("traces", traces);
  rep.plot({"traces.svg", "traces", "x = 0 traces under P and Q", {N > 1 ? "re_u_P1" : "re_u_P", N > 1 ? "re_u_Q1" : "re_u_Q"}, false});
  return rep;
}

} // namespace transop::experiments
