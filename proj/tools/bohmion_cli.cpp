// bohmion: batch front-end.
//
//   bohmion run <cfg>                                   run a scenario, write CSV + JSON
//   bohmion check [--seed N]                            invariant suites of every module
//   bohmion converge <cfg> --param <p> --levels <k>     observed orders, p in {dt, grid_spacing, alpha}
//
// Exit codes: 0 success, 1 config error, 2 invariant failure, 3 numerical failure.
// BOHMION_OUTPUT_ROOT replaces output.dir of the config.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <fmt/format.h>

#include "CLI11.hpp"
#include "config.hpp"
#include "converge.hpp"
#include "report.hpp"
#include "scenarios.hpp"
#include "suite.hpp"

namespace {

enum Exit { kOk = 0, kConfig = 1, kInvariant = 2, kNumerical = 3 };

int exit_code(const bohmion::Error& e) {
  switch (e.kind()) {
    case bohmion::ErrorKind::Config:
    case bohmion::ErrorKind::Dimension:
    case bohmion::ErrorKind::DegenerateEnsemble:
      return kConfig;
    default:
      return kNumerical;
  }
}

std::filesystem::path output_dir(const bohmion::cli::RunConfig& cfg) {
  const char* root = std::getenv("BOHMION_OUTPUT_ROOT");
  const std::filesystem::path base = root != nullptr && *root != '\0' ? std::filesystem::path(root) : std::filesystem::path(cfg.output_dir);
  return base / cfg.name;
}

bohmion::cli::RunConfig load(const std::string& path) {
  auto cfg = bohmion::cli::load_config(path);
  for (const auto& w : cfg.warnings) std::cerr << "warning: " << w << '\n';
  return cfg;
}

int cmd_run(const std::string& path) {
  const auto cfg = load(path);
  auto report = bohmion::cli::run_scenario(cfg);
  for (std::size_t i = cfg.warnings.size(); i < report.warnings.size(); ++i) {
    std::cerr << "warning: " << report.warnings[i] << '\n';
  }
  const auto dir = output_dir(cfg);
  bohmion::cli::write_report(report, dir);
  std::cout << fmt::format("{} ({}{}): {} steps, E0 = {:.12g}, E = {:.12g}, {:.2f} s\n", report.scenario, report.type,
                           report.variant.empty() ? "" : ", " + report.variant, report.steps, report.initial_energy,
                           report.final_energy, report.wall_seconds);
  for (const auto& inv : report.invariants) {
    std::cout << fmt::format("  {:<20} {:.3e}  (tol {:.1e})  {}\n", inv.name, inv.drift, inv.tolerance,
                             inv.pass() ? "ok" : "FAILED");
  }
  std::cout << "  output: " << dir.string() << '\n';
  if (const auto* bad = report.first_failure()) {
    std::cerr << fmt::format("error: invariant '{}' drifted by {:.3e}, tolerance {:.1e}\n", bad->name, bad->drift,
                             bad->tolerance);
    return kInvariant;
  }
  return kOk;
}

int cmd_check(std::uint64_t seed) {
  const auto results = bohmion::cli::run_checks(seed);
  int failed = 0;
  for (const auto& r : results) {
    std::cout << fmt::format("{}  {:<15} {:<30} {:.3e} {} {:.1e}\n", r.pass() ? "PASS" : "FAIL", r.module, r.name,
                             r.value, r.at_least ? ">=" : "<=", r.bound);
    failed += r.pass() ? 0 : 1;
  }
  std::cout << fmt::format("{} of {} checks passed\n", results.size() - static_cast<std::size_t>(failed), results.size());
  return failed == 0 ? kOk : kInvariant;
}

int cmd_converge(const std::string& path, const std::string& param, int levels) {
  const auto cfg = load(path);
  const auto r = bohmion::cli::converge(cfg, bohmion::cli::parse_converge_param(param), levels);
  std::cout << fmt::format("{}: {} sweep, {}\n", r.scenario, r.param, r.quantity);
  for (std::size_t j = 0; j < r.values.size(); ++j) {
    std::string line = fmt::format("  {:<12.6g}", r.values[j]);
    if (j < r.errors.size()) line += fmt::format(" error {:.6e}", r.errors[j]);
    if (j < r.orders.size()) line += fmt::format("  order {:.3f}", r.orders[j]);
    std::cout << line << '\n';
  }
  if (!r.monotone) std::cout << "  warning: errors are not monotone in the refinement\n";
  const auto dir = output_dir(cfg);
  std::filesystem::create_directories(dir);
  std::ofstream(dir / (cfg.name + "_converge_" + r.param + ".json"), std::ios::binary) << r.json().dump(2) << '\n';
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bohmion quantum hydrodynamics: scenario runner, invariant checks, convergence studies"};
  app.require_subcommand(1);

  std::string run_cfg;
  auto* run = app.add_subcommand("run", "run a scenario and write its trajectory and summary");
  run->add_option("config", run_cfg, "scenario configuration file")->required();

  std::uint64_t seed = 1;
  auto* check = app.add_subcommand("check", "run the invariant suites of every module");
  check->add_option("--seed", seed, "seed of the randomized suites");

  std::string conv_cfg, param;
  int levels = 4;
  auto* conv = app.add_subcommand("converge", "observed convergence order under refinement");
  conv->add_option("config", conv_cfg, "scenario configuration file")->required();
  conv->add_option("--param", param, "dt, grid_spacing or alpha")->required();
  conv->add_option("--levels", levels, "number of refinement levels (halving each)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfig;
  }

  try {
    if (*run) return cmd_run(run_cfg);
    if (*check) return cmd_check(seed);
    if (*conv) return cmd_converge(conv_cfg, param, levels);
  } catch (const bohmion::StepFailure& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kNumerical;
  } catch (const bohmion::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code(e);
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kNumerical;
  }
  return kOk;
}
