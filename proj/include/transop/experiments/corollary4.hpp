#pragma once

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "transop/evolution.hpp"
#include "transop/experiments/common.hpp"
#include "transop/experiments/parallel.hpp"
#include "transop/experiments/theorem3.hpp"
#include "transop/transform.hpp"

namespace transop::experiments {

namespace detail {

/// Samples of the drift r~ solving r~' = r~^2/2 + 2 (Q - P - r^2/4 + r'/2),
/// r~(0) = r(0), so that both pairs share the effective potential. Classical
/// RK4 with four substeps per mesh interval; the coefficient functions are
/// evaluated pointwise.
inline std::vector<cplx> riccati_partner(const ScalarFunction& P, const ScalarFunction& r, const ScalarFunction& Q,
                                         const SpatialMesh& xm) {
  const double d = 1e-5;
  auto rhs = [&](double x, cplx y) {
    const cplx rv = r(x);
    const cplx dr = (r(x + d) - r(x - d)) / (2.0 * d);
    return 0.5 * y * y + 2.0 * (Q(x) - P(x) - 0.25 * rv * rv + 0.5 * dr);
  };
  const int sub = 4;
  const double k = xm.step() / sub;
  std::vector<cplx> out(xm.size());
  cplx y = r(0.0);
  out[0] = y;
  double x = 0.0;
  for (std::size_t i = 1; i < xm.size(); ++i) {
    for (int s = 0; s < sub; ++s) {
      const cplx k1 = rhs(x, y);
      const cplx k2 = rhs(x + 0.5 * k, y + 0.5 * k * k1);
      const cplx k3 = rhs(x + 0.5 * k, y + 0.5 * k * k2);
      const cplx k4 = rhs(x + k, y + k * k3);
      y += k / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
      x += k;
    }
    if (!std::isfinite(std::abs(y)))
      throw ConfigError("equation.Q", "no partner drift: the Riccati relation blows up before x = " +
                                          std::to_string(xm.node(i)));
    out[i] = y;
  }
  return out;
}

} // namespace detail

/// Drift pairs (P, r) and (Q, r~) with r(0) = r~(0). Checks the gauge
/// identity on refining grids, that pairs with equal effective potentials
/// give the same x = 0 traces, and that perturbing the effective potential
/// inside [0, ell/2] is visible above the noise floor.
inline ScenarioReport run_corollary4(const ExperimentConfig& cfg, const RunOptions& opt = {}) {
  ScenarioReport rep("corollary4_drift");
  if (cfg.N != 1) throw ConfigError("equation.N", "drift scenarios are scalar (N = 1)");
  const cplx sigma = cfg.sigma;
  const double ell = cfg.grid.ell;
  const int levels = cfg.grid.levels;
  const auto Pf = cfg.potential("P");
  const auto rf = cfg.potential("r");
  const double min_order = cfg.threshold("min_order", 1.7);
  const double noise_factor = cfg.threshold("noise_factor", 10.0);
  const auto drive = parse_flux_drive(cfg);
  const ScalarFunction g_left = cfg.has_data("gauge_left")
                                    ? parse_function(cfg.data["gauge_left"], "data.gauge_left", {cfg.grid.T, cfg.seed})
                                    : ScalarFunction([](double t) { return cplx(t * t * t); });

  std::optional<MatrixFunction> Qf = cfg.optional_potential("Q");
  std::optional<MatrixFunction> rtf = cfg.optional_potential("r_tilde");
  if (rtf && std::abs(rtf->entries[0](0.0) - rf.entries[0](0.0)) > 1e-12)
    throw ConfigError("equation.r_tilde", "hypothesis r(0) = r~(0) violated: r(0) = " + complex_text(rf.entries[0](0.0)) +
                                              ", r~(0) = " + complex_text(rtf->entries[0](0.0)));

  // (a) exp(R) u for the drift equation against the effective-potential solve.
  ConvergenceStudy gauge;
  auto gauge_runs = parallel_map(static_cast<std::size_t>(levels), opt.threads, [&](std::size_t l) {
    const auto [xm, tm] = cfg.grid.meshes(static_cast<int>(l));
    const auto P = sample_potential(Pf, xm), r = sample_potential(rf, xm);
    DirichletData left, right;
    for (std::size_t j = 0; j < tm.size(); ++j) left.values.push_back(g_left(tm.node(j)));
    right.values.assign(tm.size(), cplx{});
    const std::vector<cplx> zero(xm.size());
    const auto u = solve_forward(sigma, P, r, zero, {left, right}, tm);
    const auto W = gauge_transform(r, u);
    const auto We = solve_forward(sigma, effective_potential(P, r), std::nullopt, zero, {left, right}, tm);
    return std::pair{xm.step(), max_abs_diff(W.values(), We.values())};
  });
  for (int l = 0; l < levels; ++l) {
    const auto [xm, tm] = cfg.grid.meshes(l);
    rep.add_grid(ell, cfg.grid.T, xm.size(), tm.size(), "gauge_level_" + std::to_string(l));
    gauge.h.push_back(gauge_runs[l].first);
    gauge.errors.push_back(gauge_runs[l].second);
  }
  assert_convergence(rep, "gauge_identity", gauge, min_order);

  // (b), (c) on the base grid, against the refined-grid noise floor.
  const auto [xm, tm] = cfg.grid.meshes(0);
  const auto [xf, tf] = cfg.grid.meshes(1);
  rep.add_grid(ell, cfg.grid.T, xf.size(), tf.size(), "noise_floor");
  const auto P = sample_potential(Pf, xm), r = sample_potential(rf, xm);
  const std::vector<cplx> zero(xm.size());
  const BoundarySpec bc{drive.sample(tm), DirichletData{{std::vector<cplx>(tm.size())}}};

  struct Pair {
    std::string name;
    PotentialField Q, r;
  };
  std::vector<Pair> pairs;
  if (Qf) {
    const auto Q = sample_potential(*Qf, xm);
    PotentialField rt = rtf ? sample_potential(*rtf, xm)
                            : PotentialField(1, xm, detail::riccati_partner(Pf.entries[0], rf.entries[0], Qf->entries[0], xm));
    rep.metric("sup_abs_r_minus_r_tilde", axpy(r, -1.0, rt).sup_norm());
    const auto gap = axpy(effective_potential(P, r), -1.0, effective_potential(Q, rt));
    rep.metric("effective_potential_gap_on_half", sup_norm_prefix(gap, 0.5 * ell));
    pairs.push_back({"equivalent", Q, rt});
  }
  const double eps = cfg.data_number("epsilon", 0.5);
  if (cfg.has_equation("Delta_inner"))
    pairs.push_back({"inner", axpy(P, eps, sample_potential(cfg.potential("Delta_inner"), xm)), r});
  if (pairs.empty()) throw ConfigError("equation", "need Q (with optional r_tilde) and/or Delta_inner");

  auto runs = parallel_map(pairs.size() + 2, opt.threads, [&](std::size_t k) {
    if (k == 0) return solve_forward(sigma, P, r, zero, bc, tm);
    if (k == 1)
      return solve_forward(sigma, sample_potential(Pf, xf), sample_potential(rf, xf), std::vector<cplx>(xf.size()),
                           {drive.sample(tf), DirichletData{{std::vector<cplx>(tf.size())}}}, tf);
    return solve_forward(sigma, pairs[k - 2].Q, pairs[k - 2].r, zero, bc, tm);
  });
  for (const auto& w : runs[0].warnings) rep.warn(w);
  const auto ref = extract_traces(runs[0]).left_value;
  const double noise = trace_gap(ref, extract_traces(runs[1]).left_value, 1, 2);
  rep.metric("noise_floor", noise);
  Table traces = time_axis(tm);
  append_series_columns(traces, "u_P_r", ref, 1);
  std::vector<std::string> cols{"re_u_P_r"};
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    const auto tr = extract_traces(runs[k + 2]).left_value;
    const double D = max_abs_diff(tr, ref);
    const double ratio = noise > 0 ? D / noise : (D > 0 ? std::numeric_limits<double>::infinity() : 0.0);
    rep.metric("discrepancy_" + pairs[k].name, D);
    rep.metric("discrepancy_over_noise_" + pairs[k].name, ratio);
    append_series_columns(traces, "u_" + pairs[k].name, tr, 1);
    cols.push_back("re_u_" + pairs[k].name);
    if (pairs[k].name == "equivalent")
      rep.check_le("equivalent_pair_discrepancy_over_noise", ratio, noise_factor, "equal effective potentials");
    else
      rep.check_ge("inner_discrepancy_over_noise", ratio, noise_factor, "effective potential perturbed in [0, ell/2]");
  }
  rep.series("traces", traces);
  rep.plot({"traces.svg", "traces", "x = 0 traces of drift pairs", cols, false});
  return rep;
}

} // namespace transop::experiments
