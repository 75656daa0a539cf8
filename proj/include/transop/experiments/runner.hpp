#pragma once

#include <filesystem>
#include <fstream>
#include <string>

#include <Eigen/Core>

#include "json.hpp"

#include "transop/experiments/config.hpp"
#include "transop/experiments/corollary4.hpp"
#include "transop/experiments/plot.hpp"
#include "transop/experiments/reconstruct.hpp"
#include "transop/experiments/remark.hpp"
#include "transop/experiments/report.hpp"
#include "transop/experiments/theorem1.hpp"
#include "transop/experiments/theorem3.hpp"
#include "transop/experiments/theorem6.hpp"

namespace transop::experiments {

inline constexpr const char* kVersion = "1.0.0";

inline ScenarioReport run_scenario(const ExperimentConfig& cfg, const RunOptions& opt = {}) {
  switch (cfg.scenario) {
  case Scenario::theorem1_case1:
  case Scenario::theorem1_case2:
  case Scenario::corollary2:
  case Scenario::corollary3_schrodinger: return run_theorem1(cfg, opt);
  case Scenario::theorem3_zero_init: return run_theorem3(cfg, opt);
  case Scenario::corollary4_drift: return run_corollary4(cfg, opt);
  case Scenario::theorem6_known_near_zero: return run_theorem6(cfg, opt);
  case Scenario::remark_counterexample: return run_remark_counterexample(cfg, opt);
  case Scenario::reconstruct: return reconstruct_potential(cfg, opt);
  }
  throw ConfigError("scenario", "unhandled scenario");
}

/// Config echo and build facts. No timestamps, so repeated runs of the same
/// config produce byte-identical reports.
inline json provenance(const ExperimentConfig& cfg) {
  return {{"config", cfg.raw},
          {"transop_version", kVersion},
          {"eigen_version", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                std::to_string(EIGEN_MINOR_VERSION)},
          {"json_library", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." + std::to_string(NLOHMANN_JSON_VERSION_MINOR) +
                               "." + std::to_string(NLOHMANN_JSON_VERSION_PATCH)},
          {"cxx_standard", static_cast<long>(__cplusplus)}};
}

/// Writes report.json, one CSV per series and, unless disabled, the SVG plots.
inline void write_outputs(const ScenarioReport& rep, const ExperimentConfig& cfg, const std::filesystem::path& dir,
                          bool plots) {
  std::filesystem::create_directories(dir);
  json j = rep.to_json();
  j["provenance"] = provenance(cfg);
  {
    std::ofstream os(dir / "report.json");
    if (!os) throw std::runtime_error("cannot write " + (dir / "report.json").string());
    os << j.dump(2) << '\n';
  }
  for (const auto& [name, table] : rep.all_series()) {
    std::ofstream os(dir / (name + ".csv"));
    if (!os) throw std::runtime_error("cannot write " + (dir / (name + ".csv")).string());
    table.write_csv(os);
  }
  if (!plots || !cfg.output_flag("plots", true)) return;
  for (const auto& p : rep.plots()) {
    auto it = rep.all_series().find(p.table);
    if (it == rep.all_series().end()) continue;
    std::ofstream os(dir / p.file);
    write_svg_plot(os, it->second, p);
  }
}

} // namespace transop::experiments
