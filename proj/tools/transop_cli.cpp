// transop_cli run --config <path> --out <dir> [--threads k] [--no-plots]
//
// Exit codes: 0 all assertions pass, 2 some assertion failed,
// 1 configuration or runtime error. TRANSOP_OUT_DIR overrides --out.

#include <algorithm>
#include <cstdlib>
#include <exception>
#include <iostream>
#include <string>
#include <thread>

#include "CLI11.hpp"

#include "transop/experiments/runner.hpp"

namespace {

int run(const std::string& config_path, std::string out_dir, unsigned threads, bool plots) {
  using namespace transop::experiments;
  if (const char* env = std::getenv("TRANSOP_OUT_DIR"); env && *env) out_dir = env;
  try {
    const auto cfg = load_config(config_path);
    const auto report = run_scenario(cfg, {threads});
    write_outputs(report, cfg, out_dir, plots);
    for (const auto& a : report.assertions())
      std::cout << (a.pass ? "PASS " : "FAIL ") << a.name << ": " << a.value << ' ' << a.comparison << ' '
                << a.threshold << '\n';
    for (const auto& w : report.warnings()) std::cerr << "warning: " << w << '\n';
    std::cout << report.scenario() << ": " << (report.passed() ? "pass" : "fail") << " (report in " << out_dir
              << "/report.json)\n";
    return report.passed() ? 0 : 2;
  } catch (const ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "runtime error: " << e.what() << '\n';
    return 1;
  }
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Transformation-operator uniqueness experiments"};
  app.require_subcommand(1);
  auto* cmd = app.add_subcommand("run", "run one scenario from a JSON config");
  std::string config, out;
  unsigned threads = std::max(1u, std::thread::hardware_concurrency());
  bool no_plots = false;
  cmd->add_option("--config", config, "scenario configuration (JSON)")->required();
  cmd->add_option("--out", out, "output directory")->required();
  cmd->add_option("--threads", threads, "worker threads for independent trials")->check(CLI::PositiveNumber);
  cmd->add_flag("--no-plots", no_plots, "skip SVG plots");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }
  return run(config, out, threads, !no_plots);
}
