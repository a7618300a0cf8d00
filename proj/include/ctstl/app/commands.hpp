#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "ctstl/app/problem_file.hpp"

namespace ctstl::app {

enum ExitCode : int {
  kExitOk = 0,
  kExitFailure = 1,       // solver did not converge, gradient check failed
  kExitInputError = 2,    // schema, CSV or formula errors
  kExitSignMismatch = 3,  // smooth and classical robustness disagree in sign
};

struct SolveOptions {
  std::filesystem::path problem_file;
  std::filesystem::path out_dir = "out";
  std::optional<int> max_iterations;
  std::optional<double> w_dyn;
  std::optional<double> w_stl;
  std::optional<double> c;
};

/// Solves the problem file and writes trajectory.csv, report.json,
/// robustness.json and the configured SVG plots into out_dir. The files are
/// written even when the solver stops without converging.
int run_solve(const SolveOptions& options, std::ostream& out, std::ostream& err);

struct MonitorOptions {
  std::filesystem::path signal_file;
  std::optional<std::string> formula;
  std::vector<std::string> constants;  // "name=value"
  std::optional<std::filesystem::path> problem_file;
  std::optional<double> c;
  std::optional<std::filesystem::path> out_file;  // stdout when empty
  /// Test hook: negates the smooth robustness before the sign comparison.
  bool flip_smooth_sign = false;
};

/// Evaluates a formula on a CSV signal and emits a JSON report with the
/// smooth and classical robustness at the first sample, the Boolean verdict,
/// witnesses and per-sample traces.
int run_monitor(const MonitorOptions& options, std::ostream& out, std::ostream& err);

struct GradientCheckHooks {
  /// Applied to every analytic flow-map Jacobian before it is compared.
  std::function<void(Eigen::MatrixXd&)> corrupt_flow_jacobian;
};

struct GradientCheckEntry {
  std::string suite;
  int point = 0;
  double max_relative_error = 0.0;
};

struct GradientCheckReport {
  std::vector<GradientCheckEntry> entries;
  double max_relative_error = 0.0;
};

/// |a - b|_inf / max(|a|_inf, |b|_inf), 0 when both are zero.
double relative_error(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);

/// Compares the analytic robustness gradient (per sample and pulled back to
/// Z) and every flow-map Jacobian against central differences at z.
GradientCheckReport check_gradients(const ProblemSpec& spec, const Eigen::VectorXd& z, int point,
                                    const GradientCheckHooks& hooks = {});

/// Random decision vector near the initial guess whose robustness evaluation
/// stays away from the relu^2 kinks. Controls are zeroed on request.
Eigen::VectorXd random_decision(const ProblemSpec& spec, std::uint64_t seed, bool zero_controls);

struct CheckGradOptions {
  std::filesystem::path problem_file;
  std::uint64_t seed = 1;
  int points = 1;
  bool zero_controls = false;
  double tolerance = 1e-5;
  GradientCheckHooks hooks;
};

int run_check_grad(const CheckGradOptions& options, std::ostream& out, std::ostream& err);

}  // namespace ctstl::app
