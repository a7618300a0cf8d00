#pragma once

#include <Eigen/Dense>
#include <memory>
#include <optional>
#include <string_view>
#include <vector>

#include "ctstl/gmsr/robustness.hpp"
#include "ctstl/qp/qp.hpp"
#include "ctstl/stl/formula.hpp"
#include "ctstl/transcription/dynamics.hpp"
#include "ctstl/transcription/transcription.hpp"

namespace ctstl::scp {

struct PenaltyConfig {
  double w_dyn = 100.0;
  double w_stl = 100.0;
  /// Target robustness gamma >= 0; the hinge becomes max(0, gamma - Gamma).
  double robustness_margin = 0.0;
  void validate() const;
};

struct ProxConfig {
  double w_initial = 1.0;
  double w_min = 1e-4;
  double w_max = 1e6;
  double grow = 3.0;    // applied after a rejected step
  double shrink = 0.5;  // applied after a very successful step
  double reject_ratio = 0.1;
  double accept_ratio = 0.7;
  int max_iterations = 50;
  double eps_pen = 1e-6;
  double eps_stat = 1e-6;  // scaled by 1 + |Z|
  void validate() const;
};

/// Fixed-horizon feasibility problem with boundary states and an optional
/// formula that must hold at the first dense sample.
struct Problem {
  std::shared_ptr<const transcription::DynamicsModel> model;
  transcription::GridSpec grid;
  Eigen::VectorXd x_initial;
  Eigen::VectorXd x_final;
  std::optional<stl::Formula> formula;
  gmsr::GmsrConfig gmsr;

  void validate() const;
  transcription::DecisionLayout layout() const;
};

/// J = w_dyn sum_k |d_k|_1 + w_stl max(0, gamma - Gamma(t_1)), with the pieces
/// needed to linearize it.
struct PenaltyEvaluation {
  double value = 0.0;
  double defect_l1 = 0.0;
  double defect_max = 0.0;
  double robustness = 0.0;  // 0 if the problem has no formula
  transcription::DenseTrajectory trajectory;
  transcription::DefectLinearization defects;
  Eigen::VectorXd robustness_gradient;  // d Gamma / dZ, empty without formula
};

PenaltyEvaluation penalty_value(const Problem& problem, const Eigen::VectorXd& z,
                                const PenaltyConfig& weights);

/// Affine models of the nonconvex terms at the current iterate.
struct Linearization {
  Eigen::VectorXd defect_values;
  Eigen::MatrixXd defect_jacobian;
  std::optional<double> robustness;
  Eigen::VectorXd robustness_gradient;
};

/// Equality rows A Z = b every iterate must satisfy.
struct BoundarySet {
  Eigen::MatrixXd A;
  Eigen::VectorXd b;
};

BoundarySet boundary_set(const Problem& problem);

/// QP in (step, defect slacks, hinge slack).
struct Subproblem {
  qp::QuadraticProgram qp;
  Linearization lin;
  PenaltyConfig weights;
  double w_ptr = 1.0;
  Eigen::Index n_decision = 0;

  Eigen::VectorXd step(const qp::QpSolution& solution) const;
  /// Linearized penalty at Z + step with optimal slacks, prox term excluded.
  double model_value(const Eigen::VectorXd& step) const;
  /// model_value plus the proximal term.
  double objective(const Eigen::VectorXd& step) const;
};

Subproblem build_subproblem(const Eigen::VectorXd& z, const Linearization& lin,
                            const PenaltyConfig& weights, double w_ptr,
                            const BoundarySet& boundary);

enum class SolveStatus { Converged, MaxIterations, SubproblemFailure };
std::string_view to_string(SolveStatus status) noexcept;

struct IterationRecord {
  int iteration = 0;
  double penalty = 0.0;
  double defect_l1 = 0.0;
  double robustness = 0.0;
  double step_norm = 0.0;
  double w_ptr = 0.0;
  double ratio = 0.0;
  bool accepted = false;
  qp::QpStatus qp_status = qp::QpStatus::Optimal;
  int qp_iterations = 0;
  double subproblem_ms = 0.0;
  double discretization_ms = 0.0;
};

struct SolveReport {
  std::vector<IterationRecord> iterations;
  SolveStatus status = SolveStatus::MaxIterations;
  double penalty = 0.0;
  double defect_max = 0.0;
  double robustness = 0.0;
};

struct SolveResult {
  Eigen::VectorXd z;
  transcription::DenseTrajectory trajectory;
  SolveReport report;
};

/// Positions on the segment from x_initial to x_final, constant velocity
/// along it, controls cancelling gravity (point_mass_3d) or zero.
Eigen::VectorXd initial_guess(const Problem& problem);

SolveResult prox_convex_solve(const Problem& problem, const PenaltyConfig& weights,
                              const ProxConfig& prox,
                              std::optional<Eigen::VectorXd> z0 = std::nullopt);

}  // namespace ctstl::scp
