#pragma once

#include <Eigen/Dense>
#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ctstl/error.hpp"
#include "ctstl/gmsr/robustness.hpp"
#include "ctstl/scp/scp.hpp"
#include "ctstl/stl/parser.hpp"
#include "ctstl/transcription/dynamics.hpp"
#include "ctstl/transcription/transcription.hpp"

namespace ctstl::app {

/// Problem file does not match the documented schema. The message starts with
/// the JSON path of the offending entry.
class SchemaError : public Error {
 public:
  using Error::Error;
};

struct PathPlot {
  std::string x = "rx";
  std::string y = "ry";
  std::optional<std::array<double, 2>> circle_center;
  double circle_radius = 0.0;
};

struct SpeedPlot {
  std::vector<std::string> channels;
  std::vector<double> limits;
};

/// m(t) = radius - |p(t) - center| over the listed position channels.
struct MarginPlot {
  std::vector<std::string> channels;
  std::vector<double> center;
  double radius = 0.0;
};

struct PlotSpec {
  std::optional<PathPlot> path;
  std::optional<SpeedPlot> speed;
  std::optional<MarginPlot> margin;
};

struct ProblemSpec {
  std::string name;
  std::string model_id;
  transcription::ModelParameters model_parameters;
  transcription::GridSpec grid;
  Eigen::VectorXd x_initial;
  Eigen::VectorXd x_final;
  std::string formula_text;
  /// Named constants after evaluation, including the injected "tf" and the
  /// dynamics parameters.
  stl::ConstantTable constants;
  gmsr::GmsrConfig gmsr;
  scp::PenaltyConfig penalty;
  scp::ProxConfig prox;
  PlotSpec plots;

  /// Model instance and parsed formula, checked against each other.
  scp::Problem problem;
};

/// Parses and validates a problem document. Throws SchemaError.
ProblemSpec parse_problem(std::string_view json_text);
ProblemSpec load_problem(const std::filesystem::path& path);

/// The parsed formula of the problem, or throws SchemaError if it has none.
const stl::Formula& problem_formula(const ProblemSpec& spec);

}  // namespace ctstl::app
