#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <cstdlib>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "ctstl/app/commands.hpp"

namespace {

// CTSTL_LOG selects off (default), info or debug; messages go to stderr.
bool configure_logging() {
  auto logger = spdlog::stderr_color_mt("ctstl");
  spdlog::set_default_logger(logger);
  spdlog::set_pattern("[%l] %v");
  const char* env = std::getenv("CTSTL_LOG");
  const std::string level = env ? env : "off";
  if (level == "off" || level.empty()) {
    spdlog::set_level(spdlog::level::off);
  } else if (level == "info") {
    spdlog::set_level(spdlog::level::info);
  } else if (level == "debug") {
    spdlog::set_level(spdlog::level::debug);
  } else {
    std::cerr << "error: CTSTL_LOG must be off, info or debug (got '" << level << "')\n";
    return false;
  }
  return true;
}

}  // namespace

int main(int argc, char** argv) {
  if (!configure_logging()) return ctstl::app::kExitInputError;

  CLI::App app{"Continuous-time STL trajectory optimization and monitoring"};
  app.require_subcommand(1);

  ctstl::app::SolveOptions solve;
  auto* solve_cmd = app.add_subcommand("solve", "Solve a problem file and write artifacts");
  solve_cmd->add_option("problem", solve.problem_file, "Problem JSON file")->required();
  solve_cmd->add_option("--out", solve.out_dir, "Output directory")->capture_default_str();
  solve_cmd->add_option("--max-iters", solve.max_iterations, "Prox-convex iteration limit")
      ->check(CLI::PositiveNumber);
  solve_cmd->add_option("--wdyn", solve.w_dyn, "Defect penalty weight")->check(CLI::PositiveNumber);
  solve_cmd->add_option("--wstl", solve.w_stl, "Robustness penalty weight")
      ->check(CLI::PositiveNumber);
  solve_cmd->add_option("--c", solve.c, "Smooth robustness shift")->check(CLI::PositiveNumber);

  ctstl::app::MonitorOptions monitor;
  std::string monitor_out;
  auto* monitor_cmd = app.add_subcommand("monitor", "Evaluate a formula on a CSV signal");
  monitor_cmd->add_option("signal", monitor.signal_file, "CSV with a header and a 't' column")
      ->required();
  monitor_cmd->add_option("--formula", monitor.formula, "Formula text");
  monitor_cmd->add_option("--const", monitor.constants, "Constant definition name=value");
  monitor_cmd->add_option("--problem", monitor.problem_file,
                          "Take formula, constants and c from a problem file");
  monitor_cmd->add_option("--c", monitor.c, "Smooth robustness shift")->check(CLI::PositiveNumber);
  monitor_cmd->add_option("--out", monitor_out, "Write the JSON report here instead of stdout");

  ctstl::app::CheckGradOptions grad;
  auto* grad_cmd = app.add_subcommand("check-grad", "Finite-difference gradient checks");
  grad_cmd->add_option("problem", grad.problem_file, "Problem JSON file")->required();
  grad_cmd->add_option("--seed", grad.seed, "Random seed")->capture_default_str();
  grad_cmd->add_option("--points", grad.points, "Number of random points")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  grad_cmd->add_flag("--zero-controls", grad.zero_controls, "Set all controls to zero");

  CLI11_PARSE(app, argc, argv);

  if (*solve_cmd) return ctstl::app::run_solve(solve, std::cout, std::cerr);
  if (*monitor_cmd) {
    if (!monitor_out.empty()) monitor.out_file = monitor_out;
    return ctstl::app::run_monitor(monitor, std::cout, std::cerr);
  }
  return ctstl::app::run_check_grad(grad, std::cout, std::cerr);
}
