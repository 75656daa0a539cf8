#pragma once

#include <algorithm>
#include <numeric>
#include <string>
#include <vector>

#include "transop/evolution.hpp"
#include "transop/experiments/common.hpp"
#include "transop/experiments/parallel.hpp"

namespace transop::experiments {

namespace detail {

inline std::vector<double> positive_epsilons(const ExperimentConfig& cfg) {
  if (!cfg.has_data("epsilons") || !cfg.data["epsilons"].is_array() || cfg.data["epsilons"].empty())
    throw ConfigError("data.epsilons", "expected a non-empty array of positive perturbation sizes");
  std::vector<double> eps;
  for (const auto& e : cfg.data["epsilons"]) {
    if (!e.is_number() || !(e.get<double>() > 0.0)) throw ConfigError("data.epsilons", "entries must be positive numbers");
    eps.push_back(e.get<double>());
  }
  std::sort(eps.begin(), eps.end());
  eps.erase(std::unique(eps.begin(), eps.end()), eps.end());
  return eps;
}

/// Profiles admissible for the single-equation results: nonvanishing with
/// zero slope at x = 0.
inline void check_admissible(const std::vector<cplx>& a, const SpatialMesh& xm, const std::string& path) {
  double lo = std::numeric_limits<double>::infinity();
  for (const auto& v : a) lo = std::min(lo, std::abs(v));
  const double slope = std::abs(derivative_at_start<cplx>(a, xm.step(), 1));
  const double scale = max_abs(a);
  if (!(lo > 0.0)) throw ConfigError(path, "profile must not vanish on [0, ell] (min |a| = " + std::to_string(lo) + ")");
  if (slope > 1e-4 * std::max(scale, 1.0) / xm.length())
    throw ConfigError(path, "profile must have zero slope at x = 0 (|a'(0)| ~ " + std::to_string(slope) + ")");
}

} // namespace detail

/// Contrapositive check of the initial/final-data uniqueness results:
/// Q = P + eps * Delta must move the x = 0 trace above the discretization
/// noise, while the eps = 0 twin stays at zero.
inline ScenarioReport run_theorem1(const ExperimentConfig& cfg, const RunOptions& opt = {}) {
  ScenarioReport rep(std::string(scenario_name(cfg.scenario)));
  const std::size_t N = cfg.N;
  const cplx sigma = cfg.sigma;
  bool final_data = cfg.scenario == Scenario::theorem1_case2;
  if (cfg.scenario == Scenario::corollary2) {
    if (N != 1 || sigma != cplx(1.0)) throw ConfigError("equation", "corollary2 requires N = 1 and sigma = 1");
    const std::string mode = cfg.data.value("mode", "initial");
    if (mode != "initial" && mode != "final") throw ConfigError("data.mode", "expected \"initial\" or \"final\"");
    final_data = mode == "final";
  }
  if (cfg.scenario == Scenario::corollary3_schrodinger && (N != 1 || sigma != cplx(0.0, 1.0)))
    throw ConfigError("equation", "corollary3_schrodinger requires N = 1 and sigma = i");

  const auto Pf = cfg.potential("P");
  const auto Df = cfg.potential("Delta");
  const auto eps = detail::positive_epsilons(cfg);
  const auto profiles = cfg.initial_profiles();
  if (profiles.size() != N)
    throw ConfigError("data.initial", "need exactly N = " + std::to_string(N) + " initial profiles, got " +
                                          std::to_string(profiles.size()));
  const double noise_factor = cfg.threshold("noise_factor", 10.0);
  const double det_floor = cfg.threshold("det_floor", 1e-10);
  const int sweeps = static_cast<int>(cfg.data_number("shooting_sweeps", 5));

  const auto [xm, tm] = cfg.grid.meshes(0);
  const auto [xf, tf] = cfg.grid.meshes(1);
  rep.add_grid(cfg.grid.ell, cfg.grid.T, xm.size(), tm.size(), "base");
  rep.add_grid(cfg.grid.ell, cfg.grid.T, xf.size(), tf.size(), "noise_floor");
  const auto P = sample_potential(Pf, xm), Pfine = sample_potential(Pf, xf);
  const auto Delta = sample_potential(Df, xm);
  const BoundarySpec bc{NeumannZero{}, parse_right_boundary(cfg, tm)};
  const BoundarySpec bc_fine{NeumannZero{}, parse_right_boundary(cfg, tf)};

  std::vector<std::vector<cplx>> a(N), a_fine(N);
  for (std::size_t k = 0; k < N; ++k) {
    a[k] = profiles[k].sample(xm);
    a_fine[k] = profiles[k].sample(xf);
    if (cfg.scenario == Scenario::corollary2 || cfg.scenario == Scenario::corollary3_schrodinger)
      detail::check_admissible(a[k], xm, "data.initial");
  }

  // Reference runs under P on the base and the refined grid.
  auto base = parallel_map(2 * N, opt.threads, [&](std::size_t idx) {
    const std::size_t k = idx % N;
    return idx < N ? solve_forward(sigma, P, std::nullopt, a[k], bc, tm)
                   : solve_forward(sigma, Pfine, std::nullopt, a_fine[k], bc_fine, tf);
  });
  for (const auto& u : base)
    for (const auto& w : u.warnings) rep.warn(w);

  std::vector<std::vector<cplx>> targets(N); // final data for case 2
  std::vector<std::vector<cplx>> det_columns(N);
  for (std::size_t k = 0; k < N; ++k) {
    auto last = base[k].slice(tm.size() - 1);
    targets[k].assign(last.begin(), last.end());
    det_columns[k] = final_data ? targets[k] : a[k];
  }
  const auto B = det_condition(det_columns);
  rep.metric("min_abs_det_B", B.min_abs_det);
  rep.metric("argmin_det_x", xm.node(B.argmin));
  if (!(B.min_abs_det > det_floor))
    throw ConfigError("data.initial", std::string("determinant condition |det(u^1 ... u^N)| > 0 on [0, ell] violated for the ") +
                                          (final_data ? "final" : "initial") + " data: min |det B| = " +
                                          std::to_string(B.min_abs_det) + " at x = " + std::to_string(xm.node(B.argmin)));

  double noise = 0.0;
  for (std::size_t k = 0; k < N; ++k)
    noise = std::max(noise, trace_gap(extract_traces(base[k]).left_value, extract_traces(base[N + k]).left_value, N, 2));
  rep.metric("noise_floor", noise);

  std::vector<double> all_eps{0.0};
  all_eps.insert(all_eps.end(), eps.begin(), eps.end());
  struct Trial {
    double discrepancy = 0.0;
    double final_mismatch = 0.0;
    std::vector<cplx> trace;
  };
  auto trials = parallel_map(all_eps.size() * N, opt.threads, [&](std::size_t idx) {
    const double e = all_eps[idx / N];
    const std::size_t k = idx % N;
    Trial tr;
    const auto Q = axpy(P, e, Delta);
    std::vector<cplx> init = a[k];
    SolutionField uq;
    if (e == 0.0) {
      uq = base[k];
    } else if (!final_data) {
      uq = solve_forward(sigma, Q, std::nullopt, init, bc, tm);
    } else {
      // Match u(T, .) by fixed-point sweeps on the initial profile.
      for (int s = 0; s < sweeps; ++s) {
        const auto trial = solve_forward(sigma, Q, std::nullopt, init, bc, tm);
        auto last = trial.slice(tm.size() - 1);
        for (std::size_t m = 0; m < init.size(); ++m) init[m] += targets[k][m] - last[m];
      }
      uq = solve_forward(sigma, Q, std::nullopt, init, bc, tm);
    }
    tr.final_mismatch = max_abs_diff(uq.slice(tm.size() - 1), targets[k]);
    const auto tq = extract_traces(uq), tp = extract_traces(base[k]);
    tr.discrepancy = max_abs_diff(tq.left_value, tp.left_value);
    tr.trace = tq.left_value;
    return tr;
  });

  Table dt;
  dt.columns = {"epsilon", "discrepancy", "discrepancy_over_noise", "final_data_mismatch"};
  std::vector<double> D(all_eps.size(), 0.0);
  for (std::size_t e = 0; e < all_eps.size(); ++e) {
    double fm = 0.0;
    for (std::size_t k = 0; k < N; ++k) {
      D[e] = std::max(D[e], trials[e * N + k].discrepancy);
      fm = std::max(fm, trials[e * N + k].final_mismatch);
    }
    dt.rows.push_back({all_eps[e], D[e], noise > 0 ? D[e] / noise : std::numeric_limits<double>::infinity(), fm});
    rep.metric("discrepancy_eps_" + std::to_string(all_eps[e]), D[e]);
    if (final_data) rep.metric("final_data_mismatch_eps_" + std::to_string(all_eps[e]), fm);
  }
  rep.table("discrepancy_vs_epsilon", dt);

  rep.check_le("twin_discrepancy_vs_noise_floor", D[0], noise, "eps = 0 twin on the base grid");
  bool increasing = true;
  for (std::size_t e = 1; e < D.size(); ++e) increasing = increasing && D[e] > D[e - 1];
  rep.check_true("discrepancy_strictly_increasing", increasing);
  const double ratio = noise > 0 ? D.back() / noise : (D.back() > 0 ? std::numeric_limits<double>::infinity() : 0.0);
  rep.metric("largest_eps", all_eps.back());
  rep.check_ge("largest_eps_discrepancy_over_noise", ratio, noise_factor);
  if (final_data)
    rep.note("final_data", "Q-runs are matched on u(T, .) by " + std::to_string(sweeps) +
                               " fixed-point sweeps on the initial profile; the residual final-data mismatch is reported");

  Table traces = time_axis(tm);
  append_series_columns(traces, "u_P", extract_traces(base[0]).left_value, N);
  append_series_columns(traces, "u_Q", trials[(all_eps.size() - 1) * N].trace, N);
  rep.series("traces", traces);
  rep.plot({"traces.svg", "traces", "x = 0 traces, reference vs largest perturbation",
            {N > 1 ? "re_u_P1" : "re_u_P", N > 1 ? "re_u_Q1" : "re_u_Q"}, false});
  return rep;
}

} // namespace transop::experiments
