#pragma once

#include <algorithm>
#include <limits>
#include <string>
#include <variant>
#include <vector>

#include "transop/evolution.hpp"
#include "transop/experiments/common.hpp"
#include "transop/experiments/parallel.hpp"
#include "transop/goursat.hpp"
#include "transop/transform.hpp"
#include "transop/volterra.hpp"

namespace transop::experiments {

/// Left flux drive phi(t) = f(t) b with scalar profile f and direction b.
struct FluxDrive {
  ScalarFunction profile;
  std::vector<cplx> direction;

  FluxData sample(const TimeMesh& tm) const {
    FluxData d;
    d.values.reserve(tm.size() * direction.size());
    for (std::size_t j = 0; j < tm.size(); ++j) {
      const cplx f = profile(tm.node(j));
      for (const auto& b : direction) d.values.push_back(f * b);
    }
    return d;
  }

  std::vector<cplx> profile_samples(const TimeMesh& tm) const {
    std::vector<cplx> out(tm.size());
    for (std::size_t j = 0; j < tm.size(); ++j) out[j] = profile(tm.node(j));
    return out;
  }
};

inline FluxDrive parse_flux_drive(const ExperimentConfig& cfg) {
  FluxDrive d;
  const json f = cfg.has_data("flux") ? cfg.data["flux"] : json{{"type", "polynomial"}, {"coeffs", {0.0, 1.0}}};
  d.profile = parse_function(f, "data.flux", {cfg.grid.T, cfg.seed});
  d.direction.assign(cfg.N, cplx(1.0));
  if (cfg.has_data("flux_direction")) {
    const json& b = cfg.data["flux_direction"];
    if (!b.is_array() || b.size() != cfg.N)
      throw ConfigError("data.flux_direction", "expected an array of N = " + std::to_string(cfg.N) + " numbers");
    for (std::size_t c = 0; c < cfg.N; ++c)
      d.direction[c] = parse_complex(b[c], "data.flux_direction[" + std::to_string(c) + "]");
  }
  return d;
}

/// Flatness order of the drive profile; a flat drive defeats the
/// nondegeneracy condition d^m/dt^m u_x(0,0) != 0 and is a config error.
inline BoundarySignal require_signal(const FluxDrive& d, const TimeMesh& tm) {
  const auto f = flatness_order(d.profile_samples(tm), tm);
  if (std::holds_alternative<Flat>(f))
    throw ConfigError("data.flux", "nondegeneracy condition d^m/dt^m u_x(0,0) != 0 fails: the boundary drive is flat at "
                                   "t = 0 (no finite order m found)");
  return std::get<BoundarySignal>(f);
}

namespace detail {

/// Largest |value| of a potential at nodes outside [lo, hi].
inline double mass_outside(const PotentialField& f, double lo, double hi) {
  double m = 0.0;
  const double h = f.mesh().step();
  for (std::size_t i = 0; i < f.mesh().size(); ++i) {
    const double x = f.mesh().node(i);
    if (x >= lo - 1e-9 * h && x <= hi + 1e-9 * h) continue;
    for (const auto& v : f.node_matrix(i)) m = std::max(m, std::abs(v));
  }
  return m;
}

struct MachineryLevel {
  double h = 0.0;
  double error = 0.0;
  int m = 0;
  cplx R0{};
  cplx R0_extracted{};
  std::vector<double> x;
  std::vector<cplx> z0, target;
};

/// Deconvolution check at one grid level: z(0,x) recovered from the Volterra
/// equation must match -K(x,0) b / sigma on the band.
inline MachineryLevel machinery_level(const ExperimentConfig& cfg, const MatrixFunction& Pf, const MatrixFunction& Qf,
                                      const FluxDrive& drive, int level, double band_lo, double band_hi,
                                      std::size_t window) {
  const auto [xm, tm] = cfg.grid.meshes(level);
  const std::size_t N = cfg.N, nx = xm.size(), nt = tm.size();
  const cplx sigma = cfg.sigma;
  const auto P = sample_potential(Pf, xm), Q = sample_potential(Qf, xm);
  const auto K = solve_goursat(P, Q);
  const FluxData flux = drive.sample(tm);
  const std::vector<cplx> zero(nx * N);
  const auto u = solve_forward(sigma, P, std::nullopt, zero, {flux, parse_right_boundary(cfg, tm)}, tm);
  const auto v = apply_kernel(K, u);
  DirichletData right;
  right.values.resize(nt * N);
  for (std::size_t j = 0; j < nt; ++j)
    for (std::size_t c = 0; c < N; ++c) right.values[j * N + c] = v(j, nx - 1, c);
  const auto uq = solve_forward(sigma, Q, std::nullopt, zero, {flux, right}, tm);

  const auto sig = require_signal(drive, tm);
  MachineryLevel out;
  out.h = xm.step();
  out.m = sig.m;
  out.R0 = sig.R[0];
  // Same quantity read off the computed flux trace, for diagnostics only.
  {
    std::vector<cplx> f(nt);
    const auto tr = extract_traces(u);
    std::size_t lead = 0;
    for (std::size_t c = 0; c < N; ++c)
      if (std::abs(drive.direction[c]) > std::abs(drive.direction[lead])) lead = c;
    for (std::size_t j = 0; j < nt; ++j) f[j] = tr.left_flux[j * N + lead] / drive.direction[lead];
    out.R0_extracted = derivative_at_start<cplx>(f, tm.step(), sig.m);
  }

  const std::size_t W = std::min(window, nt);
  const TimeMesh wm(tm.node(W - 1), W);
  const TimeSeries R(wm, {sig.R.begin(), sig.R.begin() + W});
  const TimeSeries Rp(wm, {sig.R_prime.begin(), sig.R_prime.begin() + W});
  const double h = xm.step();
  for (std::size_t i = 0; i < nx; ++i) {
    const double x = xm.node(i);
    if (x < band_lo - 1e-9 * h || x > band_hi + 1e-9 * h) continue;
    auto blk = K.block(i, 0);
    for (std::size_t r = 0; r < N; ++r) {
      std::vector<cplx> w(W);
      for (std::size_t j = 0; j < W; ++j) w[j] = v(j, i, r) - uq(j, i, r);
      const auto wm_deriv = series_derivative<cplx>(w, tm.step(), sig.m);
      const auto rhs = series_derivative<cplx>(wm_deriv, tm.step(), 1);
      const auto z = solve_second_kind(R, Rp, TimeSeries(wm, rhs));
      cplx kb{};
      for (std::size_t c = 0; c < N; ++c) kb += blk[r * N + c] * drive.direction[c];
      const cplx target = -kb / sigma;
      out.error = std::max(out.error, std::abs(z[0] - target));
      if (r == 0) {
        out.x.push_back(x);
        out.z0.push_back(z[0]);
        out.target.push_back(target);
      }
    }
  }
  if (out.x.empty()) throw ConfigError("data.check_band", "band contains no grid nodes");
  return out;
}

} // namespace detail

/// Zero initial data with a left flux drive of finite flatness order.
/// (A) recovers z(0,x) = -K(x,0) b / sigma by Volterra deconvolution and
/// checks its convergence; (B) perturbs the potential inside and outside
/// [0, ell/2] and compares x = 0 traces against the noise floor.
inline ScenarioReport run_theorem3(const ExperimentConfig& cfg, const RunOptions& opt = {}) {
  ScenarioReport rep("theorem3_zero_init");
  const std::size_t N = cfg.N;
  const cplx sigma = cfg.sigma;
  const double ell = cfg.grid.ell;
  const auto drive = parse_flux_drive(cfg);
  const double min_order = cfg.threshold("min_order", 1.7);
  const double noise_factor = cfg.threshold("noise_factor", 10.0);
  const int levels = cfg.grid.levels;

  double band_lo = 0.0, band_hi = 0.5 * ell;
  if (cfg.has_data("check_band")) {
    const json& b = cfg.data["check_band"];
    if (!b.is_array() || b.size() != 2 || !b[0].is_number() || !b[1].is_number())
      throw ConfigError("data.check_band", "expected [lo, hi] as fractions of ell");
    band_lo = b[0].get<double>() * ell;
    band_hi = b[1].get<double>() * ell;
    if (!(band_lo >= 0.0 && band_hi > band_lo && band_hi <= ell))
      throw ConfigError("data.check_band", "need 0 <= lo < hi <= 1");
  }
  const auto window = static_cast<std::size_t>(cfg.data_number("window", 40));
  if (window < 8) throw ConfigError("data.window", "need at least 8 time levels");

  const auto Pf = cfg.potential("P");
  const auto [xm0, tm0] = cfg.grid.meshes(0);
  const auto sig0 = require_signal(drive, tm0);
  rep.metric("flatness_order_m", sig0.m);
  for (int l = 0; l < levels; ++l) {
    const auto [xm, tm] = cfg.grid.meshes(l);
    rep.add_grid(ell, cfg.grid.T, xm.size(), tm.size(), "machinery_level_" + std::to_string(l));
  }

  if (cfg.has_equation("Q")) {
    const auto Qf = cfg.potential("Q");
    auto lv = parallel_map(static_cast<std::size_t>(levels), opt.threads, [&](std::size_t l) {
      return detail::machinery_level(cfg, Pf, Qf, drive, static_cast<int>(l), band_lo, band_hi, window);
    });
    ConvergenceStudy st;
    for (int l = 0; l < levels; ++l) {
      st.h.push_back(lv[l].h);
      st.errors.push_back(lv[l].error);
      rep.metric("R0_extracted_level" + std::to_string(l) + "_abs", std::abs(lv[l].R0_extracted));
    }
    rep.metric("R0_abs", std::abs(lv[0].R0));
    rep.metric("check_band_lo", band_lo);
    rep.metric("check_band_hi", band_hi);
    rep.note("R_source", "R = d^m/dt^m of the prescribed flux profile; the value read back from the computed flux "
                         "trace converges only at first order near the start-up corner and is reported as a diagnostic");
    assert_convergence(rep, "z0_plus_K_over_sigma", st, min_order);

    Table prof;
    prof.columns = {"x", "re_z0", "im_z0", "re_minus_K_over_sigma", "im_minus_K_over_sigma"};
    const auto& fin = lv.back();
    for (std::size_t k = 0; k < fin.x.size(); ++k)
      prof.rows.push_back({fin.x[k], fin.z0[k].real(), fin.z0[k].imag(), fin.target[k].real(), fin.target[k].imag()});
    rep.series("z0_profile", prof);
    rep.plot({"z0_profile.svg", "z0_profile", "recovered z(0,x) against -K(x,0)/sigma", {"re_z0", "re_minus_K_over_sigma"}, false});
  }

  if (cfg.has_equation("Delta_inner") || cfg.has_equation("Delta_outer")) {
    const double eps = cfg.data_number("epsilon", 0.5);
    // The split may run on its own horizon: the deconvolution check wants a
    // short one, trace sensitivity a long one.
    GridConfig sg = cfg.grid;
    sg.T = cfg.data_number("sensitivity_T", cfg.grid.T);
    sg.n_t = static_cast<std::size_t>(cfg.data_number("sensitivity_n_t", static_cast<double>(cfg.grid.n_t)));
    if (!(sg.T > 0.0) || sg.n_t < 8) throw ConfigError("data.sensitivity_T", "need a positive horizon and n_t >= 8");
    const auto [xs, ts] = sg.meshes(0);
    const auto [xf, tf] = sg.meshes(1);
    rep.add_grid(ell, sg.T, xs.size(), ts.size(), "sensitivity");
    rep.add_grid(ell, sg.T, xf.size(), tf.size(), "noise_floor");
    const auto P = sample_potential(Pf, xs);
    const std::vector<cplx> zero(xs.size() * N);
    const BoundarySpec bc{drive.sample(ts), parse_right_boundary(cfg, ts)};
    struct Variant {
      std::string name;
      std::optional<PotentialField> Q;
      bool asserted;
    };
    std::vector<Variant> vars;
    vars.push_back({"twin", P, true});
    if (cfg.has_equation("Delta_inner")) {
      const auto D = sample_potential(cfg.potential("Delta_inner"), xs);
      if (detail::mass_outside(D, 0.0, 0.5 * ell) > 0.0)
        rep.warn("Delta_inner is not supported in [0, ell/2]; the inner split is not clean");
      vars.push_back({"inner", axpy(P, eps, D), true});
    }
    if (cfg.has_equation("Delta_outer")) {
      const auto D = sample_potential(cfg.potential("Delta_outer"), xs);
      if (detail::mass_outside(D, 0.5 * ell, ell) > 0.0)
        rep.warn("Delta_outer touches [0, ell/2); the outer split is not clean");
      vars.push_back({"outer", axpy(P, eps, D), false});
    }
    auto runs = parallel_map(vars.size() + 1, opt.threads, [&](std::size_t k) {
      if (k == vars.size()) {
        const auto Pfine = sample_potential(Pf, xf);
        return solve_forward(sigma, Pfine, std::nullopt, std::vector<cplx>(xf.size() * N),
                             {drive.sample(tf), parse_right_boundary(cfg, tf)}, tf);
      }
      return solve_forward(sigma, *vars[k].Q, std::nullopt, zero, bc, ts);
    });
    for (const auto& w : runs[0].warnings) rep.warn(w);
    const auto ref = extract_traces(runs[0]).left_value;
    const double noise = trace_gap(ref, extract_traces(runs.back()).left_value, N, 2);
    rep.metric("noise_floor", noise);
    rep.metric("epsilon", eps);
    Table traces = time_axis(ts);
    append_series_columns(traces, "u_P", ref, N);
    for (std::size_t k = 0; k < vars.size(); ++k) {
      const auto tr = extract_traces(runs[k]).left_value;
      const double D = max_abs_diff(tr, ref);
      rep.metric("discrepancy_" + vars[k].name, D);
      if (k == 0) {
        rep.check_le("twin_discrepancy_vs_noise_floor", D, noise);
      } else {
        append_series_columns(traces, "u_" + vars[k].name, tr, N);
        const double ratio = noise > 0 ? D / noise : (D > 0 ? std::numeric_limits<double>::infinity() : 0.0);
        rep.metric("discrepancy_over_noise_" + vars[k].name, ratio);
        if (vars[k].asserted)
          rep.check_ge("inner_discrepancy_over_noise", ratio, noise_factor, "perturbation supported in [0, ell/2]");
        else
          rep.note("outer_split", "perturbation supported in (ell/2, ell]: reported without assertion");
      }
    }
    rep.series("traces", traces);
    std::vector<std::string> cols{N > 1 ? "re_u_P1" : "re_u_P"};
    for (std::size_t k = 1; k < vars.size(); ++k) cols.push_back("re_u_" + vars[k].name + (N > 1 ? "1" : ""));
    rep.plot({"traces.svg", "traces", "x = 0 traces under perturbed potentials", cols, false});
  }
  if (!cfg.has_equation("Q") && !cfg.has_equation("Delta_inner") && !cfg.has_equation("Delta_outer"))
    throw ConfigError("equation", "need Q (deconvolution check) and/or Delta_inner / Delta_outer (sensitivity split)");
  return rep;
}

} // namespace transop::experiments
